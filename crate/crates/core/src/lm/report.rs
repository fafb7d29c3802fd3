use crate::corpus::{Label, TokenSequence};
use crate::error::{Error, Result};
use crate::lm::score::{perplexity, positionwise_perplexity};
use crate::lstm::{ModelConfig, ModelParams};

/// Perplexity separation report for a labeled text set under one model:
/// per-position mean position-wise perplexities, a shared-edge text-level
/// histogram per class, and the AUC of perplexity as a carrier/stego score.
#[derive(Clone, Debug)]
pub struct PerplexityReport {
    pub position_means_carrier: Vec<f64>,
    pub position_means_stego: Vec<f64>,
    /// `bins + 1` edges shared by both class histograms.
    pub hist_edges: Vec<f64>,
    pub hist_carrier: Vec<usize>,
    pub hist_stego: Vec<usize>,
    /// AUC of text perplexity under the greater-is-stego convention; 0.5
    /// when either class is absent.
    pub auc_greater_is_stego: f64,
    /// mean(stego perplexity) − mean(carrier perplexity).
    pub separation: f64,
    pub perp_carrier: Vec<f64>,
    pub perp_stego: Vec<f64>,
}

impl PerplexityReport {
    /// Direction-free discrimination power of the perplexity score.
    pub fn discrimination(&self) -> f64 {
        self.auc_greater_is_stego.max(1.0 - self.auc_greater_is_stego)
    }
}

/// Position-wise means over texts long enough to reach each position.
fn position_means(vectors: &[Vec<f64>]) -> Vec<f64> {
    let max_len = vectors.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut sums = vec![0.0; max_len];
    let mut counts = vec![0usize; max_len];
    for v in vectors {
        for (i, &x) in v.iter().enumerate() {
            sums[i] += x;
            counts[i] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

/// Rank-based AUC (Mann-Whitney) of score as a detector of the positive
/// class, with midrank tie handling.
pub fn rank_auc(positive: &[f64], negative: &[f64]) -> f64 {
    if positive.is_empty() || negative.is_empty() {
        return 0.5;
    }
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&v| (v, true))
        .chain(negative.iter().map(|&v| (v, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // Midrank for the tie group spanning ranks i+1 ..= j+1.
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for item in &all[i..=j] {
            if item.1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let np = positive.len() as f64;
    let nn = negative.len() as f64;
    (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Equal-width histogram over shared edges; the maximum value lands in the
/// last bin, so counts sum to the sample count.
fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let lo = edges[0];
    let hi = edges[bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let mut idx = ((v - lo) / width) as usize;
        if idx >= bins {
            idx = bins - 1;
        }
        counts[idx] += 1;
    }
    counts
}

/// Score a labeled text set and build the separation report.
pub fn perplexity_report(
    params: &ModelParams,
    config: &ModelConfig,
    texts: &[TokenSequence],
    bins: usize,
) -> Result<PerplexityReport> {
    if texts.is_empty() {
        return Err(Error::Config("no texts to report on".into()));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut perp_carrier = Vec::new();
    let mut perp_stego = Vec::new();
    let mut pw_carrier = Vec::new();
    let mut pw_stego = Vec::new();
    for t in texts {
        let perp = perplexity(params, config, t)?;
        let pw = positionwise_perplexity(params, config, t)?;
        match t.label {
            Some(Label::Stego) => {
                perp_stego.push(perp);
                pw_stego.push(pw);
            }
            _ => {
                perp_carrier.push(perp);
                pw_carrier.push(pw);
            }
        }
    }

    let all: Vec<f64> = perp_carrier.iter().chain(&perp_stego).copied().collect();
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let hi = if hi - lo < 1e-12 { lo + 1.0 } else { hi };
    let edges: Vec<f64> = (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect();

    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };

    Ok(PerplexityReport {
        position_means_carrier: position_means(&pw_carrier),
        position_means_stego: position_means(&pw_stego),
        hist_carrier: histogram(&perp_carrier, &edges),
        hist_stego: histogram(&perp_stego, &edges),
        hist_edges: edges,
        auc_greater_is_stego: rank_auc(&perp_stego, &perp_carrier),
        separation: mean(&perp_stego) - mean(&perp_carrier),
        perp_carrier,
        perp_stego,
    })
}
