use crate::corpus::{Label, TokenSequence};
use crate::error::{Error, Result};

/// Confusion counts and derived metrics, with stego as the positive class.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub acc: f64,
    pub f1: f64,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> MetricsReport {
        let total = tp + fp + fn_ + tn;
        let acc = if total == 0 {
            0.0
        } else {
            (tp + tn) as f64 / total as f64
        };
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricsReport {
            tp,
            fp,
            fn_,
            tn,
            acc,
            f1,
        }
    }
}

/// Score a labeled test set with any predictor.
pub fn evaluate<F>(mut predict: F, test: &[TokenSequence]) -> Result<MetricsReport>
where
    F: FnMut(&TokenSequence) -> Result<Label>,
{
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for t in test {
        let truth = t
            .label
            .ok_or_else(|| Error::Config("test set must be labeled".into()))?;
        let pred = predict(t)?;
        match (truth, pred) {
            (Label::Stego, Label::Stego) => tp += 1,
            (Label::Carrier, Label::Stego) => fp += 1,
            (Label::Stego, Label::Carrier) => fn_ += 1,
            (Label::Carrier, Label::Carrier) => tn += 1,
        }
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BOS, EOS};

    fn text(label: Label) -> TokenSequence {
        TokenSequence::new(vec![BOS, 4, EOS], Some(label))
    }

    #[test]
    fn perfect_predictions() {
        let test = vec![text(Label::Stego), text(Label::Carrier)];
        let m = evaluate(|t| Ok(t.label.unwrap()), &test).unwrap();
        assert_eq!(m.acc, 1.0);
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn hand_derived_confusion() {
        // tp=40, fp=10, fn=20, tn=30: P = 0.8, R = 2/3, F1 = 8/11.
        let m = MetricsReport::from_counts(40, 10, 20, 30);
        assert!((m.acc - 0.7).abs() < 1e-12);
        assert!((m.f1 - 0.72727).abs() < 1e-5);
    }

    #[test]
    fn all_carrier_predictor_on_balanced_set() {
        let test: Vec<TokenSequence> = (0..10)
            .map(|i| {
                text(if i % 2 == 0 {
                    Label::Carrier
                } else {
                    Label::Stego
                })
            })
            .collect();
        let m = evaluate(|_| Ok(Label::Carrier), &test).unwrap();
        assert_eq!(m.acc, 0.5);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.tp, 0);
    }

    #[test]
    fn f1_zero_whenever_tp_zero() {
        for (fp, fn_, tn) in [(0, 5, 5), (3, 0, 4), (2, 2, 2)] {
            let m = MetricsReport::from_counts(0, fp, fn_, tn);
            assert_eq!(m.f1, 0.0);
            assert!(m.f1 >= 0.0 && m.f1 <= 1.0);
        }
    }

    #[test]
    fn unlabeled_test_is_error() {
        let test = vec![TokenSequence::new(vec![BOS, 4, EOS], None)];
        assert!(matches!(
            evaluate(|_| Ok(Label::Carrier), &test),
            Err(Error::Config(_))
        ));
    }
}
