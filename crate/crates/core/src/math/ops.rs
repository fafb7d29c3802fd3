use crate::error::{Error, Result};
use crate::math::{Mat, Scalar};

/// Probability floor applied before any logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax of one logit row (max-subtraction).
pub fn softmax_row<S: Scalar>(logits: &[S]) -> Result<Vec<S>> {
    if logits.is_empty() {
        return Err(Error::Shape("softmax of empty row".into()));
    }
    let mut max = logits[0];
    for &v in &logits[1..] {
        if v > max {
            max = v;
        }
    }
    let mut out: Vec<S> = logits.iter().map(|&v| (v - max).exp()).collect();
    let mut sum = S::zero();
    for &v in &out {
        sum += v;
    }
    for v in &mut out {
        *v /= sum;
    }
    Ok(out)
}

/// Softmax applied to every row of `m` in place.
pub fn softmax_rows_in_place<S: Scalar>(m: &mut Mat<S>) -> Result<()> {
    if m.cols() == 0 {
        return Err(Error::Shape("softmax of empty rows".into()));
    }
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let mut max = row[0];
        for &v in row[1..].iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = S::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(())
}

/// Cross-entropy `−ln probs[target]` in nats, with the probability floored
/// at [`PROB_FLOOR`] before the log.
pub fn cross_entropy<S: Scalar>(probs: &[S], target: usize) -> Result<S> {
    if target >= probs.len() {
        return Err(Error::Index(format!(
            "cross_entropy target {} out of range for {} classes",
            target,
            probs.len()
        )));
    }
    let floor = S::from_f64(PROB_FLOOR);
    let p = if probs[target] > floor {
        probs[target]
    } else {
        floor
    };
    Ok(-p.ln())
}

pub fn argmax<S: Scalar>(xs: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_symmetry() {
        let p = softmax_row(&[0.0f64, 0.0]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_shift_invariance_analytic_ratio() {
        // Shift magnitudes kept moderate so `c + ln 3` itself stays exact to
        // well under the 1e-12 assertion; huge shifts are covered by the
        // stability test below.
        for &c in &[-100.0f64, 0.0, 3.5, 1000.0] {
            let p = softmax_row(&[c, c + 3.0f64.ln()]).unwrap();
            assert!((p[0] - 0.25).abs() < 1e-12, "p0={}", p[0]);
            assert!((p[1] - 0.75).abs() < 1e-12, "p1={}", p[1]);
        }
    }

    #[test]
    fn softmax_stable_under_large_logits() {
        let a = softmax_row(&[1000.0f64, 1001.0]).unwrap();
        let b = softmax_row(&[0.0f64, 1.0]).unwrap();
        assert!(a.iter().all(|v| v.is_finite()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_empty_is_shape_error() {
        assert!(matches!(
            softmax_row::<f64>(&[]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut rng = crate::math::Rng::new(5);
        for _ in 0..50 {
            let row: Vec<f64> = (0..17).map(|_| rng.uniform_in(-30.0, 30.0)).collect();
            let p = softmax_row(&row).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(p.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn cross_entropy_one_hot_is_zero() {
        assert_eq!(cross_entropy(&[0.0f64, 1.0, 0.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn cross_entropy_uniform_two_classes() {
        let v = cross_entropy(&[0.5f64, 0.5], 0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_direct_evaluation() {
        let v = cross_entropy(&[0.1f64, 0.9], 0).unwrap();
        assert!((v - 10.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_target_out_of_range() {
        assert!(matches!(
            cross_entropy(&[1.0f64], 1),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn cross_entropy_nonnegative_and_floored() {
        let v = cross_entropy(&[0.0f64, 1.0], 0).unwrap();
        assert!(v >= 0.0);
        assert!((v - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }
}
