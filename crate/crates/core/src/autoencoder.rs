//! Sequence-autoencoder pre-training: the encoder compresses a text into
//! its final recurrent state, and a decoder sharing the encoder's weights
//! reconstructs the text from that state via the vocabulary head.

use crate::corpus::{Batch, TokenSequence};
use crate::error::{Error, Result};
use crate::lm::{
    eval_mean, lm_distribution, run_training, LossCurves, TrainOptions,
};
use crate::lstm::{
    backward_sequence, forward_sequence, BatchedState, Checkpoint, HeadKind, ModelConfig,
    ModelParams, StreamState, TrunkGrads,
};
use crate::math::{argmax, Rng};

/// Autoencoder configuration. Encoder and decoder are one parameter set by
/// construction (a single `ModelParams` serves both passes), so there is no
/// copy to drift.
#[derive(Clone, Copy, Debug)]
pub struct AeConfig {
    pub model: ModelConfig,
    /// Feed ground-truth previous tokens to the decoder while training.
    /// When off, the decoder free-runs on its own argmax predictions.
    pub teacher_forcing: bool,
}

impl AeConfig {
    pub fn new(model: ModelConfig) -> AeConfig {
        AeConfig {
            model,
            teacher_forcing: true,
        }
    }
}

/// Encoder pass: consume the framed text, return the final (h, c) of every
/// layer. Identical to `forward_sequence`'s final state by definition.
pub fn encode(params: &ModelParams, config: &ModelConfig, batch: &Batch) -> Result<BatchedState> {
    Ok(forward_sequence(params, config, batch, None, None)?.final_state)
}

/// Build the decoder's input ids when teacher forcing is off: start from
/// BOS and feed the model its own argmax predictions, one sequence at a
/// time from its encoded state.
fn free_running_inputs(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &Batch,
    enc_state: &BatchedState,
) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::with_capacity(batch.size());
    for r in 0..batch.size() {
        let mut state = StreamState {
            h: enc_state.h.iter().map(|m| m.row(r).to_vec()).collect(),
            c: enc_state.c.iter().map(|m| m.row(r).to_vec()).collect(),
        };
        let mut ids = vec![crate::corpus::BOS];
        for _ in 1..batch.lens[r] {
            let last = *ids.last().unwrap();
            state.step(params, config, last)?;
            let dist = lm_distribution(params, &state)?;
            ids.push(argmax(&dist) as u32);
        }
        ids.resize(batch.max_len(), crate::corpus::PAD);
        out.push(ids);
    }
    Ok(out)
}

/// One autoencoder training step over a batch: encoder sweep, decoder sweep
/// starting from the encoder's final state (both h and c of every layer),
/// masked reconstruction cross-entropy, and one gradient accumulation
/// across both passes into the shared weights.
pub fn ae_batch_step(
    params: &mut ModelParams,
    ae: &AeConfig,
    batch: &Batch,
    mut dropout_rng: Option<&mut Rng>,
) -> Result<(f64, usize)> {
    let config = &ae.model;
    let enc_cache = forward_sequence(params, config, batch, None, dropout_rng.as_deref_mut())?;
    let enc_final = enc_cache.final_state.clone();

    let dec_batch = if ae.teacher_forcing {
        batch.clone()
    } else {
        Batch {
            ids: free_running_inputs(params, config, batch, &enc_final)?,
            lens: batch.lens.clone(),
            labels: batch.labels.clone(),
        }
    };

    // Decoder pass predicts the ORIGINAL tokens; with teacher forcing the
    // decoder inputs coincide with them. Targets and masking always come
    // from the original batch.
    let dec_cache = forward_sequence(
        params,
        config,
        &dec_batch,
        Some(&enc_final),
        dropout_rng.as_deref_mut(),
    )?;
    let (loss, total, grads) = crate::lm::lm_head_pass(params, batch, &dec_cache, true)?;
    let g = grads.expect("grads requested");
    if total == 0 {
        return Ok((loss, total));
    }
    crate::lm::apply_lm_head_grads(params, &g)?;
    let d_init = backward_sequence(
        params,
        config,
        &dec_batch,
        &dec_cache,
        TrunkGrads {
            dh_top: g.dh_top,
            d_final: None,
        },
    )?;
    backward_sequence(
        params,
        config,
        batch,
        &enc_cache,
        TrunkGrads {
            dh_top: Vec::new(),
            d_final: Some(d_init),
        },
    )?;
    Ok((loss, total))
}

/// Loss-only evaluation of the reconstruction objective (teacher forcing,
/// dropout off).
pub fn ae_batch_loss(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &Batch,
) -> Result<(f64, usize)> {
    let enc_final = encode(params, config, batch)?;
    let cache = forward_sequence(params, config, batch, Some(&enc_final), None)?;
    let (loss, total, _) = crate::lm::lm_head_pass(params, batch, &cache, false)?;
    Ok((loss, total))
}

/// Train the sequence autoencoder; same optimizer and schedule as the LM.
pub fn train_ae(
    train: &[TokenSequence],
    val: &[TokenSequence],
    ae: &AeConfig,
    opts: &TrainOptions,
) -> Result<(Checkpoint, LossCurves, usize)> {
    let params = ModelParams::init(&ae.model, HeadKind::Lm, &mut Rng::sub(opts.seed, "ae-init"));
    let ae_cfg = *ae;
    let outcome = run_training(
        params,
        &ae.model,
        train,
        val,
        opts,
        move |p, _c, b, rng| ae_batch_step(p, &ae_cfg, b, rng),
        |p, c, b| ae_batch_loss(p, c, b),
    )?;
    let ck = Checkpoint {
        config: ae.model,
        params: outcome.params,
        seed: opts.seed,
        stage: "ae-pretrain".into(),
    };
    Ok((ck, outcome.curves, outcome.epochs_ran))
}

/// Greedy reconstruction of one text from its encoded state; returns the
/// predicted token at every scored position.
pub fn reconstruct(
    params: &ModelParams,
    config: &ModelConfig,
    seq: &TokenSequence,
    teacher_forcing: bool,
) -> Result<Vec<u32>> {
    let batch = Batch::from_sequences(&[seq]);
    let enc = encode(params, config, &batch)?;
    let mut state = StreamState {
        h: enc.h.iter().map(|m| m.row(0).to_vec()).collect(),
        c: enc.c.iter().map(|m| m.row(0).to_vec()).collect(),
    };
    let mut predictions = Vec::with_capacity(seq.scored_len());
    let mut input = seq.ids[0];
    for t in 0..seq.scored_len() {
        state.step(params, config, input)?;
        let dist = lm_distribution(params, &state)?;
        let pred = argmax(&dist) as u32;
        predictions.push(pred);
        input = if teacher_forcing { seq.ids[t + 1] } else { pred };
    }
    Ok(predictions)
}

/// Mean token accuracy of greedy reconstruction over a text set.
pub fn reconstruction_accuracy(
    params: &ModelParams,
    config: &ModelConfig,
    texts: &[TokenSequence],
    teacher_forcing: bool,
) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::Config("no texts".into()));
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for t in texts {
        let pred = reconstruct(params, config, t, teacher_forcing)?;
        for (p, &want) in pred.iter().zip(&t.ids[1..]) {
            if *p == want {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(correct as f64 / total as f64)
}

/// Mean teacher-forced reconstruction loss over a text set.
pub fn ae_eval_loss(
    params: &ModelParams,
    config: &ModelConfig,
    texts: &[TokenSequence],
    batch_size: usize,
) -> Result<f64> {
    eval_mean(params, config, texts, batch_size, &mut |p, c, b| {
        ae_batch_loss(p, c, b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BOS, EOS};

    fn tiny() -> AeConfig {
        let mut model = ModelConfig::new(10).with_dims(6, 8);
        model.dropout_keep = 1.0;
        AeConfig::new(model)
    }

    fn seqs(n: usize) -> Vec<TokenSequence> {
        (0..n)
            .map(|_| TokenSequence::new(vec![BOS, 4, 5, 6, 7, EOS], None))
            .collect()
    }

    #[test]
    fn encoder_state_equals_forward_final_state() {
        let ae = tiny();
        let params = ModelParams::init(&ae.model, HeadKind::Lm, &mut Rng::new(1));
        let all = seqs(2);
        let batch = Batch::from_sequences(&all.iter().collect::<Vec<_>>());
        let enc = encode(&params, &ae.model, &batch).unwrap();
        let fwd = forward_sequence(&params, &ae.model, &batch, None, None).unwrap();
        for l in 0..ae.model.layers {
            assert_eq!(enc.h[l].data(), fwd.final_state.h[l].data());
            assert_eq!(enc.c[l].data(), fwd.final_state.c[l].data());
        }
    }

    #[test]
    fn memorizes_single_repeated_sentence() {
        let ae = tiny();
        let train = seqs(8);
        let val = seqs(2);
        let mut opts = TrainOptions::new(5);
        opts.epochs = 60;
        opts.batch_size = 4;
        opts.dropout = false;
        let (ck, _, _) = train_ae(&train, &val, &ae, &opts).unwrap();
        let acc = reconstruction_accuracy(&ck.params, &ck.config, &val, true).unwrap();
        assert!(acc > 0.99, "reconstruction accuracy {acc}");
    }

    #[test]
    fn training_is_deterministic() {
        let ae = tiny();
        let train = seqs(6);
        let val = seqs(2);
        let mut opts = TrainOptions::new(9);
        opts.epochs = 3;
        opts.batch_size = 2;
        let (_, a, _) = train_ae(&train, &val, &ae, &opts).unwrap();
        let (_, b, _) = train_ae(&train, &val, &ae, &opts).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.val, b.val);
    }

    #[test]
    fn free_running_step_runs() {
        let mut ae = tiny();
        ae.teacher_forcing = false;
        let mut params = ModelParams::init(&ae.model, HeadKind::Lm, &mut Rng::new(2));
        let all = seqs(3);
        let batch = Batch::from_sequences(&all.iter().collect::<Vec<_>>());
        let (loss, total) = ae_batch_step(&mut params, &ae, &batch, None).unwrap();
        assert!(loss.is_finite());
        assert_eq!(total, batch.scored_total());
    }

    #[test]
    fn empty_train_is_config_error() {
        let ae = tiny();
        let opts = TrainOptions::new(1);
        assert!(matches!(
            train_ae(&[], &seqs(1), &ae, &opts),
            Err(Error::Config(_))
        ));
    }
}
