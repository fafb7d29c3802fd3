use crate::corpus::Batch;
use crate::error::{Error, Result};
use crate::lstm::{ModelConfig, ModelParams};
use crate::math::{add_bias_rows, matmul_bt, Rng};
use crate::Matrix;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-layer recurrent state for a batch: h and c, each B×H.
#[derive(Clone, Debug)]
pub struct BatchedState {
    pub h: Vec<Matrix>,
    pub c: Vec<Matrix>,
}

impl BatchedState {
    pub fn zeros(config: &ModelConfig, batch: usize) -> BatchedState {
        BatchedState {
            h: (0..config.layers)
                .map(|_| Matrix::zeros(batch, config.hidden_dim))
                .collect(),
            c: (0..config.layers)
                .map(|_| Matrix::zeros(batch, config.hidden_dim))
                .collect(),
        }
    }
}

/// Cached activations of one layer at one time step. Gate values are the
/// computed ones; `c` and `h` are post-freeze (masked rows carry the
/// previous state through unchanged).
#[derive(Clone, Debug)]
pub struct LayerStepCache {
    pub gate_i: Matrix,
    pub gate_f: Matrix,
    pub gate_g: Matrix,
    pub gate_o: Matrix,
    /// tanh of the computed candidate cell state.
    pub tanh_c: Matrix,
    pub c: Matrix,
    pub h: Matrix,
}

/// Everything the backward pass needs from one forward sweep.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// steps[t].layers\[l\]
    pub steps: Vec<StepCache>,
    /// Post-dropout embedding input per step, B×E.
    pub embedded: Vec<Matrix>,
    /// Inverted-dropout multipliers (0 or 1/keep) when training.
    pub drop_mask: Option<Vec<Matrix>>,
    pub init_state: BatchedState,
    pub final_state: BatchedState,
}

#[derive(Clone, Debug)]
pub struct StepCache {
    pub layers: Vec<LayerStepCache>,
}

impl ForwardCache {
    /// Hidden output of the top layer at step `t` (post-freeze).
    pub fn top_h(&self, t: usize) -> &Matrix {
        &self.steps[t].layers.last().expect("at least one layer").h
    }
}

/// Run the LSTM over a right-padded batch.
///
/// Standard recurrence per layer: i,f,o = logistic(pre), g = tanh(pre),
/// c' = f⊙c + i⊙g, h = o⊙tanh(c'). On PAD steps the state is carried
/// through unchanged (masked update). Dropout is applied to the embedding
/// output only, and only when `dropout_rng` is supplied (training mode).
pub fn forward_sequence(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &Batch,
    init: Option<&BatchedState>,
    mut dropout_rng: Option<&mut Rng>,
) -> Result<ForwardCache> {
    let b = batch.size();
    let t_max = batch.max_len();
    let h_dim = config.hidden_dim;
    let e_dim = config.embed_dim;
    let v = config.vocab_size;

    for row in &batch.ids {
        if let Some(&bad) = row.iter().find(|&&id| id as usize >= v) {
            return Err(Error::Index(format!("token id {bad} >= vocab size {v}")));
        }
    }

    let init_state = match init {
        Some(s) => s.clone(),
        None => BatchedState::zeros(config, b),
    };
    let mut state = init_state.clone();
    let input_mask = batch.input_mask();

    let mut steps = Vec::with_capacity(t_max);
    let mut embedded = Vec::with_capacity(t_max);
    let mut drop_mask = dropout_rng.as_ref().map(|_| Vec::with_capacity(t_max));

    for t in 0..t_max {
        // Embedding lookup.
        let mut x = Matrix::zeros(b, e_dim);
        for r in 0..b {
            let id = batch.ids[r][t] as usize;
            x.row_mut(r).copy_from_slice(params.embedding.value.row(id));
        }
        // Inverted dropout on the embedding output.
        if let Some(rng) = dropout_rng.as_deref_mut() {
            let keep = config.dropout_keep;
            let mut mask = Matrix::zeros(b, e_dim);
            for (m, xv) in mask.data_mut().iter_mut().zip(x.data_mut().iter_mut()) {
                *m = if rng.uniform() < keep { 1.0 / keep } else { 0.0 };
                *xv *= *m;
            }
            drop_mask.as_mut().unwrap().push(mask);
        }
        embedded.push(x);

        let mut layer_caches = Vec::with_capacity(config.layers);
        let mut layer_input = embedded[t].clone();
        for l in 0..config.layers {
            let layer = &params.layers[l];
            // pre = input·Wᵀ + h_prev·Uᵀ + b, in that order.
            let mut pre = matmul_bt(&layer_input, &layer.w_in.value)?;
            pre.add_assign(&matmul_bt(&state.h[l], &layer.w_rec.value)?)?;
            add_bias_rows(&mut pre, &layer.bias.value)?;

            let mut gate_i = Matrix::zeros(b, h_dim);
            let mut gate_f = Matrix::zeros(b, h_dim);
            let mut gate_g = Matrix::zeros(b, h_dim);
            let mut gate_o = Matrix::zeros(b, h_dim);
            let mut tanh_c = Matrix::zeros(b, h_dim);
            let mut c_new = Matrix::zeros(b, h_dim);
            let mut h_new = Matrix::zeros(b, h_dim);
            for r in 0..b {
                let pre_row = pre.row(r);
                let c_prev = state.c[l].row(r);
                let m = input_mask.get(r, t);
                let (ci, cf, cg, co) = (
                    &pre_row[0..h_dim],
                    &pre_row[h_dim..2 * h_dim],
                    &pre_row[2 * h_dim..3 * h_dim],
                    &pre_row[3 * h_dim..4 * h_dim],
                );
                for j in 0..h_dim {
                    let gi = sigmoid(ci[j]);
                    let gf = sigmoid(cf[j]);
                    let gg = cg[j].tanh();
                    let go = sigmoid(co[j]);
                    let c_cand = gf * c_prev[j] + gi * gg;
                    let tc = c_cand.tanh();
                    let h_cand = go * tc;
                    gate_i.set(r, j, gi);
                    gate_f.set(r, j, gf);
                    gate_g.set(r, j, gg);
                    gate_o.set(r, j, go);
                    tanh_c.set(r, j, tc);
                    // Masked update: PAD steps freeze the state.
                    if m == 1.0 {
                        c_new.set(r, j, c_cand);
                        h_new.set(r, j, h_cand);
                    } else {
                        c_new.set(r, j, c_prev[j]);
                        h_new.set(r, j, state.h[l].get(r, j));
                    }
                }
            }
            state.c[l] = c_new.clone();
            state.h[l] = h_new.clone();
            layer_caches.push(LayerStepCache {
                gate_i,
                gate_f,
                gate_g,
                gate_o,
                tanh_c,
                c: c_new,
                h: h_new.clone(),
            });
            layer_input = h_new;
        }
        steps.push(StepCache {
            layers: layer_caches,
        });
    }

    Ok(ForwardCache {
        steps,
        embedded,
        drop_mask,
        init_state,
        final_state: state,
    })
}

/// Incremental single-sequence state for generation and scoring. Produces
/// bit-identical hidden vectors to the batched path (same summation order).
#[derive(Clone, Debug)]
pub struct StreamState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

impl StreamState {
    pub fn start(config: &ModelConfig) -> StreamState {
        StreamState {
            h: vec![vec![0.0; config.hidden_dim]; config.layers],
            c: vec![vec![0.0; config.hidden_dim]; config.layers],
        }
    }

    /// Advance the state by one token (inference mode, no dropout).
    pub fn step(&mut self, params: &ModelParams, config: &ModelConfig, token: u32) -> Result<()> {
        let v = config.vocab_size;
        if token as usize >= v {
            return Err(Error::Index(format!("token id {token} >= vocab size {v}")));
        }
        let h_dim = config.hidden_dim;
        let mut x: Vec<f64> = params.embedding.value.row(token as usize).to_vec();
        for l in 0..config.layers {
            let layer = &params.layers[l];
            let mut h_new = vec![0.0; h_dim];
            let mut c_new = vec![0.0; h_dim];
            {
                let h_prev = &self.h[l];
                let c_prev = &self.c[l];
                let bias = layer.bias.value.row(0);
                for j in 0..h_dim {
                    let pre_gate = |g: usize| -> f64 {
                        let row_idx = g * h_dim + j;
                        let wi = layer.w_in.value.row(row_idx);
                        let wr = layer.w_rec.value.row(row_idx);
                        let mut a = 0.0;
                        for (xv, wv) in x.iter().zip(wi) {
                            a += xv * wv;
                        }
                        let mut b = 0.0;
                        for (hv, wv) in h_prev.iter().zip(wr) {
                            b += hv * wv;
                        }
                        a + b + bias[row_idx]
                    };
                    let gi = sigmoid(pre_gate(0));
                    let gf = sigmoid(pre_gate(1));
                    let gg = pre_gate(2).tanh();
                    let go = sigmoid(pre_gate(3));
                    let c = gf * c_prev[j] + gi * gg;
                    c_new[j] = c;
                    h_new[j] = go * c.tanh();
                }
            }
            x = h_new.clone();
            self.h[l] = h_new;
            self.c[l] = c_new;
        }
        Ok(())
    }

    pub fn top_h(&self) -> &[f64] {
        self.h.last().expect("at least one layer")
    }

    /// Consume a token prefix from a fresh state.
    pub fn over(params: &ModelParams, config: &ModelConfig, ids: &[u32]) -> Result<StreamState> {
        let mut s = StreamState::start(config);
        for &id in ids {
            s.step(params, config, id)?;
        }
        Ok(s)
    }
}
