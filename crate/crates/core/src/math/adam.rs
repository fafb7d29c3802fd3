use crate::error::{Error, Result};
use crate::math::{Mat, Scalar};

/// Adam hyperparameters. Only the learning rate is an experiment knob; the
/// moment decays and epsilon stay at their conventional values.
#[derive(Clone, Copy, Debug)]
pub struct AdamHyper<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> Default for AdamHyper<S> {
    fn default() -> Self {
        AdamHyper {
            lr: S::from_f64(1e-3),
            beta1: S::from_f64(0.9),
            beta2: S::from_f64(0.999),
            eps: S::from_f64(1e-8),
        }
    }
}

impl<S: Scalar> AdamHyper<S> {
    pub fn with_lr(lr: S) -> Self {
        AdamHyper {
            lr,
            ..Default::default()
        }
    }
}

/// One trainable parameter tensor with its gradient and Adam moment buffers.
/// All four matrices share one shape; `step` counts optimizer applications.
#[derive(Clone, Debug)]
pub struct Param<S> {
    pub value: Mat<S>,
    pub grad: Mat<S>,
    pub adam_m: Mat<S>,
    pub adam_v: Mat<S>,
    pub step: u64,
}

impl<S: Scalar> Param<S> {
    pub fn new(value: Mat<S>) -> Self {
        let (r, c) = value.shape();
        Param {
            value,
            grad: Mat::zeros(r, c),
            adam_m: Mat::zeros(r, c),
            adam_v: Mat::zeros(r, c),
            step: 0,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Param::new(Mat::zeros(rows, cols))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::zero());
    }

    /// Standard Adam update with bias correction. The gradient buffer is
    /// zeroed afterwards and `step` is incremented.
    pub fn adam_step(&mut self, hp: &AdamHyper<S>) -> Result<()> {
        if self.grad.shape() != self.value.shape()
            || self.adam_m.shape() != self.value.shape()
            || self.adam_v.shape() != self.value.shape()
        {
            return Err(Error::Shape("param buffers disagree on shape".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let one = S::one();
        let bc1 = one - hp.beta1.powi(t);
        let bc2 = one - hp.beta2.powi(t);
        let m = self.adam_m.data_mut();
        let v = self.adam_v.data_mut();
        let g = self.grad.data();
        let val = self.value.data_mut();
        for i in 0..val.len() {
            m[i] = hp.beta1 * m[i] + (one - hp.beta1) * g[i];
            v[i] = hp.beta2 * v[i] + (one - hp.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            val[i] = val[i] - hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
        }
        self.grad.fill(S::zero());
        debug_assert!(self.value.is_finite(), "adam produced non-finite values");
        Ok(())
    }
}

/// Global-norm gradient clipping across a set of parameters. Returns the
/// pre-clip norm; when it exceeds `max_norm` every gradient is rescaled so
/// the global norm equals `max_norm`.
pub fn clip_global_norm<S: Scalar>(params: &mut [&mut Param<S>], max_norm: S) -> S {
    let mut sq = S::zero();
    for p in params.iter() {
        for &g in p.grad.data() {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for p in params.iter_mut() {
            p.grad.scale(scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = Param<f64>;

    #[test]
    fn zero_gradient_leaves_value_and_increments_step() {
        let mut p = P::new(Mat::from_rows(&[vec![1.0, -2.0]]).unwrap());
        let before = p.value.clone();
        p.adam_step(&AdamHyper::default()).unwrap();
        assert_eq!(p.value, before);
        assert_eq!(p.step, 1);
    }

    #[test]
    fn unit_gradient_first_step_magnitude() {
        // m̂ = v̂ = 1 at step 1, so the update is lr / (1 + eps).
        let mut p = P::zeros(1, 1);
        p.grad.set(0, 0, 1.0);
        let hp = AdamHyper::with_lr(1e-3);
        p.adam_step(&hp).unwrap();
        let update = -p.value.get(0, 0);
        assert!((update - 1e-3 / (1.0 + 1e-8)).abs() < 1e-12, "update={update}");
        // Gradient zeroed afterwards.
        assert_eq!(p.grad.get(0, 0), 0.0);
    }

    #[test]
    fn identical_blocks_identical_results() {
        let mut a = P::new(Mat::from_rows(&[vec![0.3, -0.7], vec![2.0, 0.1]]).unwrap());
        let mut b = a.clone();
        for step in 0..5 {
            for (i, g) in a.grad.data_mut().iter_mut().enumerate() {
                *g = (i as f64 + 1.0) * 0.01 * (step as f64 + 1.0);
            }
            b.grad = a.grad.clone();
            a.adam_step(&AdamHyper::default()).unwrap();
            b.adam_step(&AdamHyper::default()).unwrap();
        }
        assert_eq!(a.value, b.value);
        assert_eq!(a.adam_m, b.adam_m);
        assert_eq!(a.adam_v, b.adam_v);
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut p = P::zeros(1, 2);
        p.grad.set(0, 0, 30.0);
        p.grad.set(0, 1, 40.0);
        let pre = clip_global_norm(&mut [&mut p], 5.0);
        assert!((pre - 50.0).abs() < 1e-12);
        let post: f64 = p.grad.data().iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(post <= 5.0 + 1e-9);
        assert!((post - 5.0).abs() < 1e-9);
    }

    #[test]
    fn clip_noop_below_threshold() {
        let mut p = P::zeros(1, 2);
        p.grad.set(0, 0, 1.0);
        let pre = clip_global_norm(&mut [&mut p], 5.0);
        assert!((pre - 1.0).abs() < 1e-12);
        assert_eq!(p.grad.get(0, 0), 1.0);
    }
}
