use crate::corpus::Batch;
use crate::error::{Error, Result};
use crate::lstm::{
    backward_sequence, forward_sequence, ForwardCache, Head, ModelConfig,
    ModelParams, TrunkGrads,
};
use crate::math::{
    add_bias_rows, col_sums, matmul, matmul_at, matmul_bt, softmax_rows_in_place, Rng, PROB_FLOOR,
};
use crate::Matrix;

/// Head-side gradients produced by an objective pass, applied by whoever
/// holds the mutable parameters.
pub(crate) struct LmHeadGrads {
    pub d_proj: Matrix,
    pub d_bias: Matrix,
    pub dh_top: Vec<Matrix>,
}

/// Next-token objective over a cached forward sweep: mean masked
/// cross-entropy of predicting token t+1 from the top hidden state at step
/// t (teacher forcing). Returns (mean loss, scored count, gradients when
/// requested).
pub(crate) fn lm_head_pass(
    params: &ModelParams,
    batch: &Batch,
    cache: &ForwardCache,
    want_grads: bool,
) -> Result<(f64, usize, Option<LmHeadGrads>)> {
    let (proj, bias) = match &params.head {
        Head::Lm { proj, bias } => (proj, bias),
        Head::Binary { .. } => {
            return Err(Error::State("lm objective needs an lm head".into()))
        }
    };
    let b = batch.size();
    let h_dim = proj.value.cols();
    let v = proj.value.rows();
    let scored_mask = batch.scored_mask();
    let total = batch.scored_total();
    let t_steps = batch.max_len().saturating_sub(1);

    let mut grads = if want_grads {
        Some(LmHeadGrads {
            d_proj: Matrix::zeros(v, h_dim),
            d_bias: Matrix::zeros(1, v),
            dh_top: Vec::with_capacity(t_steps + 1),
        })
    } else {
        None
    };
    if total == 0 {
        if let Some(g) = grads.as_mut() {
            g.dh_top = (0..batch.max_len())
                .map(|_| Matrix::zeros(b, h_dim))
                .collect();
        }
        return Ok((0.0, 0, grads));
    }

    let inv_total = 1.0 / total as f64;
    let mut loss_sum = 0.0;
    for t in 0..t_steps {
        let h_t = cache.top_h(t);
        let mut probs = matmul_bt(h_t, &proj.value)?;
        add_bias_rows(&mut probs, &bias.value)?;
        softmax_rows_in_place(&mut probs)?;
        for r in 0..b {
            if scored_mask.get(r, t) == 0.0 {
                continue;
            }
            let target = batch.ids[r][t + 1] as usize;
            loss_sum += -probs.get(r, target).max(PROB_FLOOR).ln();
        }
        if let Some(g) = grads.as_mut() {
            // dlogits = (probs − onehot) · mask / total
            let mut d = probs;
            for r in 0..b {
                let row = d.row_mut(r);
                if scored_mask.get(r, t) == 0.0 {
                    row.fill(0.0);
                    continue;
                }
                let target = batch.ids[r][t + 1] as usize;
                row[target] -= 1.0;
                for x in row.iter_mut() {
                    *x *= inv_total;
                }
            }
            g.d_proj.add_assign(&matmul_at(&d, h_t)?)?;
            g.d_bias.add_assign(&col_sums(&d))?;
            g.dh_top.push(matmul(&d, &proj.value)?);
        }
    }
    if let Some(g) = grads.as_mut() {
        // Nothing is predicted from the final input step.
        g.dh_top.push(Matrix::zeros(b, h_dim));
    }
    Ok((loss_sum * inv_total, total, grads))
}

pub(crate) fn apply_lm_head_grads(params: &mut ModelParams, g: &LmHeadGrads) -> Result<()> {
    match &mut params.head {
        Head::Lm { proj, bias } => {
            proj.grad.add_assign(&g.d_proj)?;
            bias.grad.add_assign(&g.d_bias)?;
            Ok(())
        }
        Head::Binary { .. } => Err(Error::State("lm objective needs an lm head".into())),
    }
}

/// Loss-only evaluation (no dropout, no gradients).
pub fn lm_batch_loss(params: &ModelParams, config: &ModelConfig, batch: &Batch) -> Result<(f64, usize)> {
    let cache = forward_sequence(params, config, batch, None, None)?;
    let (loss, total, _) = lm_head_pass(params, batch, &cache, false)?;
    Ok((loss, total))
}

/// One training step: forward (with dropout when `dropout_rng` is given),
/// loss, and gradient accumulation through head and trunk. Returns the mean
/// loss and the number of scored positions.
pub fn lm_batch_step(
    params: &mut ModelParams,
    config: &ModelConfig,
    batch: &Batch,
    dropout_rng: Option<&mut Rng>,
) -> Result<(f64, usize)> {
    let cache = forward_sequence(params, config, batch, None, dropout_rng)?;
    let (loss, total, grads) = lm_head_pass(params, batch, &cache, true)?;
    let g = grads.expect("grads requested");
    if total > 0 {
        apply_lm_head_grads(params, &g)?;
        backward_sequence(
            params,
            config,
            batch,
            &cache,
            TrunkGrads {
                dh_top: g.dh_top,
                d_final: None,
            },
        )?;
    }
    Ok((loss, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{TokenSequence, BOS, EOS};
    use crate::lstm::HeadKind;

    fn setup() -> (ModelConfig, ModelParams, Batch) {
        let mut config = ModelConfig::new(12).with_dims(4, 6);
        config.dropout_keep = 1.0;
        let params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(1));
        let a = TokenSequence::new(vec![BOS, 4, 5, EOS], None);
        let b = TokenSequence::new(vec![BOS, 6, EOS], None);
        (config, params, Batch::from_sequences(&[&a, &b]))
    }

    #[test]
    fn step_and_eval_agree_without_dropout() {
        let (config, mut params, batch) = setup();
        let (eval_loss, eval_n) = lm_batch_loss(&params, &config, &batch).unwrap();
        let (step_loss, step_n) = lm_batch_step(&mut params, &config, &batch, None).unwrap();
        assert_eq!(eval_loss, step_loss);
        assert_eq!(eval_n, step_n);
        assert_eq!(step_n, 5); // 3 + 2 scored positions
    }

    #[test]
    fn initial_loss_near_ln_v() {
        // Random ±0.08 init keeps logits near zero, so the next-token loss
        // starts near ln V (uniform prediction).
        let (config, params, batch) = setup();
        let (loss, _) = lm_batch_loss(&params, &config, &batch).unwrap();
        let ln_v = (config.vocab_size as f64).ln();
        assert!((loss - ln_v).abs() < 0.1, "loss={loss} ln V={ln_v}");
    }

    #[test]
    fn binary_head_rejected() {
        let mut config = ModelConfig::new(12).with_dims(4, 6);
        config.dropout_keep = 1.0;
        let params = ModelParams::init(&config, HeadKind::Binary, &mut Rng::new(1));
        let a = TokenSequence::new(vec![BOS, 4, EOS], None);
        let batch = Batch::from_sequences(&[&a]);
        assert!(matches!(
            lm_batch_loss(&params, &config, &batch),
            Err(Error::State(_))
        ));
    }
}
