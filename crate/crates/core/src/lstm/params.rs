use crate::error::{Error, Result};
use crate::lstm::ModelConfig;
use crate::math::Rng;
use crate::{Matrix, ParamBlock};

/// Uniform init range for all weight matrices.
pub const INIT_RANGE: f64 = 0.08;

/// One LSTM layer: input weights (4H × in_dim), recurrent weights (4H × H),
/// bias (1 × 4H). Gate order within the 4H axis is fixed as
/// (input i, forget f, cell g, output o).
#[derive(Clone, Debug)]
pub struct LayerParams {
    pub w_in: ParamBlock,
    pub w_rec: ParamBlock,
    pub bias: ParamBlock,
}

/// Projection head on top of the LSTM trunk.
#[derive(Clone, Debug)]
pub enum Head {
    /// Vocabulary projection for next-word prediction: V×H weights + 1×V bias.
    Lm { proj: ParamBlock, bias: ParamBlock },
    /// Two-way carrier/stego projection on the last hidden vector.
    Binary { fc: ParamBlock, bias: ParamBlock },
}

impl Head {
    pub fn kind(&self) -> &'static str {
        match self {
            Head::Lm { .. } => "lm",
            Head::Binary { .. } => "binary",
        }
    }
}

/// Embedding + LSTM trunk + projection head, each with gradient and Adam
/// moment buffers.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub embedding: ParamBlock,
    pub layers: Vec<LayerParams>,
    pub head: Head,
}

fn uniform_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.uniform_in(-INIT_RANGE, INIT_RANGE))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("consistent dims")
}

fn init_layer(config: &ModelConfig, l: usize, rng: &mut Rng) -> LayerParams {
    let h = config.hidden_dim;
    let in_dim = config.layer_input_dim(l);
    let mut bias = Matrix::zeros(1, 4 * h);
    // Forget-gate bias starts at 1.0 so early training does not flush the
    // cell state.
    for j in h..2 * h {
        bias.set(0, j, 1.0);
    }
    LayerParams {
        w_in: ParamBlock::new(uniform_matrix(4 * h, in_dim, rng)),
        w_rec: ParamBlock::new(uniform_matrix(4 * h, h, rng)),
        bias: ParamBlock::new(bias),
    }
}

pub fn init_head(config: &ModelConfig, kind: HeadKind, rng: &mut Rng) -> Head {
    let h = config.hidden_dim;
    match kind {
        HeadKind::Lm => Head::Lm {
            proj: ParamBlock::new(uniform_matrix(config.vocab_size, h, rng)),
            bias: ParamBlock::zeros(1, config.vocab_size),
        },
        HeadKind::Binary => Head::Binary {
            fc: ParamBlock::new(uniform_matrix(2, h, rng)),
            bias: ParamBlock::zeros(1, 2),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadKind {
    Lm,
    Binary,
}

impl ModelParams {
    /// Fresh parameters: weights uniform in ±0.08, biases zero except the
    /// forget gate (1.0).
    pub fn init(config: &ModelConfig, kind: HeadKind, rng: &mut Rng) -> ModelParams {
        let embedding = ParamBlock::new(uniform_matrix(
            config.vocab_size,
            config.embed_dim,
            rng,
        ));
        let layers = (0..config.layers)
            .map(|l| init_layer(config, l, rng))
            .collect();
        ModelParams {
            embedding,
            layers,
            head: init_head(config, kind, rng),
        }
    }

    /// All parameter blocks with their checkpoint names, in the fixed
    /// serialization order.
    pub fn blocks(&self) -> Vec<(String, &ParamBlock)> {
        let mut out: Vec<(String, &ParamBlock)> = vec![("embedding".into(), &self.embedding)];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("l{l}.w_in"), &layer.w_in));
            out.push((format!("l{l}.w_rec"), &layer.w_rec));
            out.push((format!("l{l}.bias"), &layer.bias));
        }
        match &self.head {
            Head::Lm { proj, bias } => {
                out.push(("head.w".into(), proj));
                out.push(("head.b".into(), bias));
            }
            Head::Binary { fc, bias } => {
                out.push(("head.w".into(), fc));
                out.push(("head.b".into(), bias));
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(String, &mut ParamBlock)> {
        let mut out: Vec<(String, &mut ParamBlock)> =
            vec![("embedding".into(), &mut self.embedding)];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("l{l}.w_in"), &mut layer.w_in));
            out.push((format!("l{l}.w_rec"), &mut layer.w_rec));
            out.push((format!("l{l}.bias"), &mut layer.bias));
        }
        match &mut self.head {
            Head::Lm { proj, bias } => {
                out.push(("head.w".into(), proj));
                out.push(("head.b".into(), bias));
            }
            Head::Binary { fc, bias } => {
                out.push(("head.w".into(), fc));
                out.push(("head.b".into(), bias));
            }
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for (_, b) in self.blocks_mut() {
            b.zero_grad();
        }
    }

    /// Validate parameter shapes against a config.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let h = config.hidden_dim;
        if self.embedding.value.shape() != (config.vocab_size, config.embed_dim) {
            return Err(Error::Shape(format!(
                "embedding {:?}, expected {}x{}",
                self.embedding.value.shape(),
                config.vocab_size,
                config.embed_dim
            )));
        }
        if self.layers.len() != config.layers {
            return Err(Error::Shape(format!(
                "{} layers, expected {}",
                self.layers.len(),
                config.layers
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let expect_in = config.layer_input_dim(l);
            if layer.w_in.value.shape() != (4 * h, expect_in)
                || layer.w_rec.value.shape() != (4 * h, h)
                || layer.bias.value.shape() != (1, 4 * h)
            {
                return Err(Error::Shape(format!("layer {l} shapes inconsistent")));
            }
        }
        match &self.head {
            Head::Lm { proj, bias } => {
                if proj.value.shape() != (config.vocab_size, h)
                    || bias.value.shape() != (1, config.vocab_size)
                {
                    return Err(Error::Shape("lm head shapes inconsistent".into()));
                }
            }
            Head::Binary { fc, bias } => {
                if fc.value.shape() != (2, h) || bias.value.shape() != (1, 2) {
                    return Err(Error::Shape("binary head shapes inconsistent".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seed_deterministic() {
        let config = ModelConfig::new(30).with_dims(8, 12);
        let a = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(5));
        let b = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(5));
        for ((_, x), (_, y)) in a.blocks().iter().zip(b.blocks().iter()) {
            assert_eq!(x.value, y.value);
        }
    }

    #[test]
    fn forget_gate_bias_is_one() {
        let config = ModelConfig::new(30).with_dims(8, 12);
        let p = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(5));
        let h = config.hidden_dim;
        let bias = &p.layers[0].bias.value;
        for j in 0..4 * h {
            let expect = if (h..2 * h).contains(&j) { 1.0 } else { 0.0 };
            assert_eq!(bias.get(0, j), expect);
        }
    }

    #[test]
    fn shapes_validate() {
        let config = ModelConfig::new(30).with_dims(8, 12);
        let p = ModelParams::init(&config, HeadKind::Binary, &mut Rng::new(1));
        p.check_shapes(&config).unwrap();
        let other = ModelConfig::new(31).with_dims(8, 12);
        assert!(p.check_shapes(&other).is_err());
    }
}
