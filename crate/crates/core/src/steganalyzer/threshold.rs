use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    GreaterIsStego,
    LessIsStego,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::GreaterIsStego => "greater-is-stego",
            Direction::LessIsStego => "less-is-stego",
        }
    }

    pub fn parse(s: &str) -> Result<Direction> {
        match s {
            "greater-is-stego" | "greater" => Ok(Direction::GreaterIsStego),
            "less-is-stego" | "less" => Ok(Direction::LessIsStego),
            other => Err(Error::Parse(format!("unknown direction '{other}'"))),
        }
    }
}

/// Perplexity-threshold detector, fitted on validation data only.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdDetector {
    pub tau: f64,
    pub direction: Direction,
}

impl ThresholdDetector {
    pub fn classify(&self, score: f64) -> Label {
        let is_stego = match self.direction {
            Direction::GreaterIsStego => score > self.tau,
            Direction::LessIsStego => score < self.tau,
        };
        if is_stego {
            Label::Stego
        } else {
            Label::Carrier
        }
    }
}

fn accuracy(scored: &[(f64, Label)], det: &ThresholdDetector) -> f64 {
    let correct = scored
        .iter()
        .filter(|(s, l)| det.classify(*s) == *l)
        .count();
    correct as f64 / scored.len() as f64
}

/// Exhaustive threshold fit: candidate taus are the midpoints of sorted
/// unique scores plus one sentinel beyond each end (covering the two
/// constant predictors), crossed with both directions. Maximizes accuracy;
/// ties prefer the smaller tau, then greater-is-stego.
pub fn fit_threshold(scored: &[(f64, Label)]) -> Result<(ThresholdDetector, f64)> {
    let have_carrier = scored.iter().any(|(_, l)| *l == Label::Carrier);
    let have_stego = scored.iter().any(|(_, l)| *l == Label::Stego);
    if !have_carrier || !have_stego {
        return Err(Error::Config(
            "threshold fitting needs both classes".into(),
        ));
    }
    let mut unique: Vec<f64> = scored.iter().map(|(s, _)| *s).collect();
    unique.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    unique.dedup();

    let mut candidates = Vec::with_capacity(unique.len() + 1);
    candidates.push(unique[0] - 1.0);
    for w in unique.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(unique[unique.len() - 1] + 1.0);

    let mut best: Option<(f64, ThresholdDetector)> = None;
    for &tau in &candidates {
        for direction in [Direction::GreaterIsStego, Direction::LessIsStego] {
            let det = ThresholdDetector { tau, direction };
            let acc = accuracy(scored, &det);
            let better = match &best {
                None => true,
                Some((best_acc, best_det)) => {
                    acc > *best_acc
                        || (acc == *best_acc
                            && (tau < best_det.tau
                                || (tau == best_det.tau
                                    && direction == Direction::GreaterIsStego
                                    && best_det.direction == Direction::LessIsStego)))
                }
            };
            if better {
                best = Some((acc, det));
            }
        }
    }
    let (acc, det) = best.expect("candidates nonempty");
    Ok((det, acc))
}
