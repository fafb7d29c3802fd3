use crate::autoencoder::{ae_batch_loss, ae_batch_step, AeConfig};
use crate::corpus::{Batch, Label, TokenSequence, BOS, EOS};
use crate::error::Result;
use crate::lm::{lm_batch_loss, lm_batch_step};
use crate::lstm::{HeadKind, ModelConfig, ModelParams};
use crate::math::Rng;
use crate::steganalyzer::{clf_batch_loss, clf_batch_step};
use crate::Matrix;

/// Which training objective to verify against central finite differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradTask {
    Lm,
    Ae,
    Classifier,
}

impl GradTask {
    pub fn as_str(&self) -> &'static str {
        match self {
            GradTask::Lm => "lm",
            GradTask::Ae => "ae",
            GradTask::Classifier => "classifier",
        }
    }
}

/// Small architecture used for gradient verification.
pub fn tiny_config() -> ModelConfig {
    let mut c = ModelConfig::new(20).with_dims(8, 12);
    c.dropout_keep = 1.0; // dropout disabled during checks
    c
}

fn check_batch(config: &ModelConfig, task: GradTask, rng: &mut Rng) -> Batch {
    // Mixed lengths so the PAD freeze path is exercised too.
    let lens = [4usize, 6, 3];
    let seqs: Vec<TokenSequence> = lens
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let mut ids = vec![BOS];
            for _ in 0..len {
                ids.push(4 + rng.below(config.vocab_size - 4) as u32);
            }
            ids.push(EOS);
            let label = match task {
                GradTask::Classifier => Some(if i % 2 == 0 {
                    Label::Carrier
                } else {
                    Label::Stego
                }),
                _ => None,
            };
            TokenSequence::new(ids, label)
        })
        .collect();
    Batch::from_sequences(&seqs.iter().collect::<Vec<_>>())
}

fn loss_only(params: &ModelParams, config: &ModelConfig, task: GradTask, batch: &Batch) -> Result<f64> {
    Ok(match task {
        GradTask::Lm => lm_batch_loss(params, config, batch)?.0,
        GradTask::Ae => ae_batch_loss(params, config, batch)?.0,
        GradTask::Classifier => clf_batch_loss(params, config, batch)?.0,
    })
}

fn loss_and_grads(
    params: &mut ModelParams,
    config: &ModelConfig,
    task: GradTask,
    batch: &Batch,
) -> Result<f64> {
    Ok(match task {
        GradTask::Lm => lm_batch_step(params, config, batch, None)?.0,
        GradTask::Ae => {
            let ae = AeConfig::new(*config);
            ae_batch_step(params, &ae, batch, None)?.0
        }
        GradTask::Classifier => clf_batch_step(params, config, batch, None)?.0,
    })
}

/// Compare analytic BPTT gradients against central finite differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` per coordinate on the given batch (dropout
/// off, no clipping). Returns the maximum over parameters of
/// `|analytic − numeric| / max(1e-8, |analytic| + |numeric|)`.
///
/// A batch with nothing to score is vacuous and reports 0.
pub fn grad_check_on(
    params: &mut ModelParams,
    config: &ModelConfig,
    task: GradTask,
    batch: &Batch,
    eps: f64,
) -> Result<f64> {
    let vacuous = match task {
        GradTask::Classifier => batch.size() == 0,
        _ => batch.scored_total() == 0,
    };
    if vacuous {
        return Ok(0.0);
    }

    params.zero_grads();
    loss_and_grads(params, config, task, batch)?;
    let analytic: Vec<Matrix> = params
        .blocks()
        .iter()
        .map(|(_, b)| b.grad.clone())
        .collect();
    params.zero_grads();

    let n_blocks = analytic.len();
    let mut max_rel = 0.0f64;
    for bi in 0..n_blocks {
        let coords = analytic[bi].data().len();
        for i in 0..coords {
            let original = {
                let mut blocks = params.blocks_mut();
                blocks[bi].1.value.data_mut()[i]
            };
            {
                let mut blocks = params.blocks_mut();
                blocks[bi].1.value.data_mut()[i] = original + eps;
            }
            let plus = loss_only(params, config, task, batch)?;
            {
                let mut blocks = params.blocks_mut();
                blocks[bi].1.value.data_mut()[i] = original - eps;
            }
            let minus = loss_only(params, config, task, batch)?;
            {
                let mut blocks = params.blocks_mut();
                blocks[bi].1.value.data_mut()[i] = original;
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[bi].data()[i];
            let rel = (a - numeric).abs() / (1e-8f64).max(a.abs() + numeric.abs());
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}

/// Build a tiny model and a random mixed-length batch for `task`, then run
/// [`grad_check_on`].
pub fn grad_check(config: &ModelConfig, task: GradTask, seed: u64, eps: f64) -> Result<f64> {
    let head = match task {
        GradTask::Classifier => HeadKind::Binary,
        _ => HeadKind::Lm,
    };
    let mut params = ModelParams::init(config, head, &mut Rng::sub(seed, "grad-check-init"));
    let batch = check_batch(config, task, &mut Rng::sub(seed, "grad-check-batch"));
    grad_check_on(&mut params, config, task, &batch, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-5;
    const TOL: f64 = 1e-4;

    #[test]
    fn lm_gradients_match_finite_differences() {
        let config = tiny_config();
        let err = grad_check(&config, GradTask::Lm, 17, EPS).unwrap();
        assert!(err < TOL, "max relative error {err}");
    }

    #[test]
    fn classifier_gradients_match_finite_differences() {
        let config = tiny_config();
        let err = grad_check(&config, GradTask::Classifier, 18, EPS).unwrap();
        assert!(err < TOL, "max relative error {err}");
    }

    #[test]
    fn ae_gradients_match_finite_differences() {
        let config = tiny_config();
        let err = grad_check(&config, GradTask::Ae, 19, EPS).unwrap();
        assert!(err < TOL, "max relative error {err}");
    }

    #[test]
    fn vacuous_batch_reports_zero() {
        let config = tiny_config();
        let mut params =
            ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(1));
        let batch = Batch {
            ids: Vec::new(),
            lens: Vec::new(),
            labels: None,
        };
        let err = grad_check_on(&mut params, &config, GradTask::Lm, &batch, EPS).unwrap();
        assert_eq!(err, 0.0);
    }
}
