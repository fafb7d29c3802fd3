use crate::error::{Error, Result};

/// Architecture hyperparameters shared by the language model, the sequence
/// autoencoder, and the classifier trunk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    /// Retention probability of the inverted dropout applied to the
    /// embedding output (training mode only).
    pub dropout_keep: f64,
}

impl ModelConfig {
    /// Reference-scale defaults: 128-D embedding, 256-D hidden, 2 layers,
    /// keep probability 0.5.
    pub fn new(vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: 128,
            hidden_dim: 256,
            layers: 2,
            dropout_keep: 0.5,
        }
    }

    pub fn with_dims(mut self, embed_dim: usize, hidden_dim: usize) -> ModelConfig {
        self.embed_dim = embed_dim;
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim < 1 || self.hidden_dim < 1 || self.layers < 1 {
            return Err(Error::Config(format!(
                "dims must be >= 1: E={} H={} L={}",
                self.embed_dim, self.hidden_dim, self.layers
            )));
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Error::Config(format!(
                "dropout_keep must be in (0, 1], got {}",
                self.dropout_keep
            )));
        }
        if self.vocab_size < crate::corpus::NUM_SPECIALS + 1 {
            return Err(Error::Config(format!(
                "vocab_size {} leaves no room past the specials",
                self.vocab_size
            )));
        }
        Ok(())
    }

    /// Input width of layer `l`: embeddings feed layer 0, hidden vectors
    /// feed the rest.
    pub fn layer_input_dim(&self, l: usize) -> usize {
        if l == 0 {
            self.embed_dim
        } else {
            self.hidden_dim
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_scale() {
        let c = ModelConfig::new(50_000);
        assert_eq!(c.embed_dim, 128);
        assert_eq!(c.hidden_dim, 256);
        assert_eq!(c.layers, 2);
        assert_eq!(c.dropout_keep, 0.5);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_dropout() {
        let mut c = ModelConfig::new(100);
        c.dropout_keep = 0.0;
        assert!(c.validate().is_err());
        c.dropout_keep = 1.5;
        assert!(c.validate().is_err());
    }
}
