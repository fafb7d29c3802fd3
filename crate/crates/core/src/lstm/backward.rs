use crate::corpus::Batch;
use crate::error::Result;
use crate::lstm::{BatchedState, ForwardCache, ModelConfig, ModelParams};
use crate::math::{col_sums, matmul, matmul_at};
use crate::Matrix;

/// Gradients flowing into the LSTM trunk from whatever head sits on top.
#[derive(Clone, Debug, Default)]
pub struct TrunkGrads {
    /// Per step t: B×H gradient w.r.t. the top layer's h_t. Empty means all
    /// zeros (e.g. a classifier that only reads the final state).
    pub dh_top: Vec<Matrix>,
    /// Gradient w.r.t. the final (post-freeze) state of every layer.
    pub d_final: Option<BatchedState>,
}

/// Backpropagation through time over a cached forward sweep.
///
/// Accumulates exact gradients of the loss into the embedding and layer
/// blocks (head gradients are the caller's job, since the head also
/// produced `grads`). Returns the gradient w.r.t. the initial state so an
/// encoder can be chained in front. Gradient clipping is a separate
/// operation applied by the training loops.
pub fn backward_sequence(
    params: &mut ModelParams,
    config: &ModelConfig,
    batch: &Batch,
    cache: &ForwardCache,
    grads: TrunkGrads,
) -> Result<BatchedState> {
    let b = batch.size();
    let t_max = batch.max_len();
    let h_dim = config.hidden_dim;
    let input_mask = batch.input_mask();

    if !grads.dh_top.is_empty() {
        assert_eq!(grads.dh_top.len(), t_max, "dh_top must cover every step");
    }

    let mut d_init = BatchedState::zeros(config, b);
    // Gradient w.r.t. each layer's output h_t, fed from the layer above
    // (or the head for the top layer).
    let mut from_above: Vec<Matrix> = if grads.dh_top.is_empty() {
        (0..t_max).map(|_| Matrix::zeros(b, h_dim)).collect()
    } else {
        grads.dh_top
    };

    for l in (0..config.layers).rev() {
        let in_dim = config.layer_input_dim(l);
        let mut dh_next = Matrix::zeros(b, h_dim);
        let mut dc_next = Matrix::zeros(b, h_dim);
        if let Some(fin) = &grads.d_final {
            dh_next.add_assign(&fin.h[l])?;
            dc_next.add_assign(&fin.c[l])?;
        }
        let mut dx_store: Vec<Matrix> = Vec::with_capacity(t_max);

        for t in (0..t_max).rev() {
            let lc = &cache.steps[t].layers[l];
            let mut dh_t = from_above[t].clone();
            dh_t.add_assign(&dh_next)?;
            let dc_t = dc_next;

            let c_prev_mat = if t == 0 {
                &cache.init_state.c[l]
            } else {
                &cache.steps[t - 1].layers[l].c
            };
            let h_prev_mat = if t == 0 {
                &cache.init_state.h[l]
            } else {
                &cache.steps[t - 1].layers[l].h
            };

            // Gate pre-activation gradients, zero on frozen rows. Frozen
            // rows pass dh/dc straight through to the previous step.
            let mut dpre = Matrix::zeros(b, 4 * h_dim);
            let mut dh_carry = Matrix::zeros(b, h_dim);
            let mut dc_carry = Matrix::zeros(b, h_dim);
            for r in 0..b {
                if input_mask.get(r, t) == 0.0 {
                    dh_carry.row_mut(r).copy_from_slice(dh_t.row(r));
                    dc_carry.row_mut(r).copy_from_slice(dc_t.row(r));
                    continue;
                }
                let dh_row = dh_t.row(r);
                let dc_row = dc_t.row(r);
                let gi = lc.gate_i.row(r);
                let gf = lc.gate_f.row(r);
                let gg = lc.gate_g.row(r);
                let go = lc.gate_o.row(r);
                let tc = lc.tanh_c.row(r);
                let c_prev = c_prev_mat.row(r);
                let dpre_row = dpre.row_mut(r);
                for j in 0..h_dim {
                    let d_o = dh_row[j] * tc[j];
                    let d_c = dc_row[j] + dh_row[j] * go[j] * (1.0 - tc[j] * tc[j]);
                    let d_f = d_c * c_prev[j];
                    let d_i = d_c * gg[j];
                    let d_g = d_c * gi[j];
                    dpre_row[j] = d_i * gi[j] * (1.0 - gi[j]);
                    dpre_row[h_dim + j] = d_f * gf[j] * (1.0 - gf[j]);
                    dpre_row[2 * h_dim + j] = d_g * (1.0 - gg[j] * gg[j]);
                    dpre_row[3 * h_dim + j] = d_o * go[j] * (1.0 - go[j]);
                }
                let dc_carry_row = dc_carry.row_mut(r);
                for j in 0..h_dim {
                    let d_c = dc_row[j] + dh_row[j] * go[j] * (1.0 - tc[j] * tc[j]);
                    dc_carry_row[j] = d_c * gf[j];
                }
            }

            let layer = &mut params.layers[l];
            let input: &Matrix = if l == 0 {
                &cache.embedded[t]
            } else {
                &cache.steps[t].layers[l - 1].h
            };
            layer.w_in.grad.add_assign(&matmul_at(&dpre, input)?)?;
            layer.w_rec.grad.add_assign(&matmul_at(&dpre, h_prev_mat)?)?;
            layer.bias.grad.add_assign(&col_sums(&dpre))?;

            let dx_t = matmul(&dpre, &layer.w_in.value)?;
            debug_assert_eq!(dx_t.shape(), (b, in_dim));
            let mut dh_rec = matmul(&dpre, &layer.w_rec.value)?;
            dh_rec.add_assign(&dh_carry)?;
            dh_next = dh_rec;
            dc_next = dc_carry;
            dx_store.push(dx_t);
        }
        dx_store.reverse();

        d_init.h[l] = dh_next;
        d_init.c[l] = dc_next;
        from_above = dx_store;
    }

    // from_above now holds d(embedded input) per step; route through the
    // dropout mask and scatter into embedding rows. Frozen rows carry zero
    // gradient by construction.
    for (t, dx) in from_above.iter_mut().enumerate() {
        if let Some(masks) = &cache.drop_mask {
            for (g, m) in dx.data_mut().iter_mut().zip(masks[t].data()) {
                *g *= m;
            }
        }
        for r in 0..b {
            let id = batch.ids[r][t] as usize;
            let dst = params.embedding.grad.row_mut(id);
            for (d, g) in dst.iter_mut().zip(dx.row(r)) {
                *d += g;
            }
        }
    }

    Ok(d_init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{TokenSequence, BOS, EOS};
    use crate::lstm::{forward_sequence, HeadKind};
    use crate::math::Rng;

    fn tiny_config() -> ModelConfig {
        let mut c = ModelConfig::new(12).with_dims(4, 6);
        c.dropout_keep = 1.0;
        c
    }

    fn batch() -> Batch {
        let a = TokenSequence::new(vec![BOS, 4, 5, EOS], None);
        let b = TokenSequence::new(vec![BOS, 6, EOS], None);
        Batch::from_sequences(&[&a, &b])
    }

    #[test]
    fn zero_loss_grad_gives_zero_param_grads() {
        let config = tiny_config();
        let mut params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(1));
        let batch = batch();
        let cache = forward_sequence(&params, &config, &batch, None, None).unwrap();
        backward_sequence(&mut params, &config, &batch, &cache, TrunkGrads::default()).unwrap();
        for (name, block) in params.blocks() {
            assert!(
                block.grad.data().iter().all(|&g| g == 0.0),
                "nonzero grad in {name}"
            );
        }
    }

    #[test]
    fn backward_is_deterministic() {
        let config = tiny_config();
        let run = || {
            let mut params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(2));
            let batch = batch();
            let cache = forward_sequence(&params, &config, &batch, None, None).unwrap();
            let mut dh_top: Vec<Matrix> = Vec::new();
            let mut rng = Rng::new(9);
            for _ in 0..batch.max_len() {
                let mut m = Matrix::zeros(batch.size(), config.hidden_dim);
                for v in m.data_mut() {
                    *v = rng.uniform_in(-1.0, 1.0);
                }
                dh_top.push(m);
            }
            let grads = TrunkGrads {
                dh_top,
                d_final: None,
            };
            backward_sequence(&mut params, &config, &batch, &cache, grads).unwrap();
            params
                .blocks()
                .iter()
                .map(|(_, b)| b.grad.clone())
                .collect::<Vec<_>>()
        };
        let a = run();
        let b = run();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.data(), y.data());
        }
    }
}
