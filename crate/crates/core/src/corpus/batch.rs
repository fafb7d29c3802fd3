use crate::corpus::{Label, TokenSequence, PAD};
use crate::math::Rng;
use crate::Matrix;

/// Right-padded id matrix for one mini-batch.
#[derive(Clone, Debug)]
pub struct Batch {
    /// batch × max_len token ids, PAD-padded on the right.
    pub ids: Vec<Vec<u32>>,
    /// Real (unpadded) length of each row, BOS and EOS included.
    pub lens: Vec<usize>,
    pub labels: Option<Vec<Label>>,
}

impl Batch {
    pub fn from_sequences(seqs: &[&TokenSequence]) -> Batch {
        let max_len = seqs.iter().map(|s| s.ids.len()).max().unwrap_or(0);
        let mut ids = Vec::with_capacity(seqs.len());
        let mut lens = Vec::with_capacity(seqs.len());
        for s in seqs {
            let mut row = s.ids.clone();
            row.resize(max_len, PAD);
            ids.push(row);
            lens.push(s.ids.len());
        }
        let labels = if seqs.iter().all(|s| s.label.is_some()) && !seqs.is_empty() {
            Some(seqs.iter().map(|s| s.label.unwrap()).collect())
        } else {
            None
        };
        Batch { ids, lens, labels }
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn max_len(&self) -> usize {
        self.ids.first().map_or(0, |r| r.len())
    }

    /// 1.0 where the input token at step t is real, 0.0 on PAD. Used to
    /// freeze recurrent state on padded steps.
    pub fn input_mask(&self) -> Matrix {
        let t = self.max_len();
        let mut m = Matrix::zeros(self.size(), t);
        for (r, &len) in self.lens.iter().enumerate() {
            for c in 0..len {
                m.set(r, c, 1.0);
            }
        }
        m
    }

    /// Mask of scored positions for next-token prediction: entry (r, t) is
    /// 1.0 iff token t+1 of row r is real, i.e. zero exactly where the
    /// prediction target is PAD. Row sums equal each sequence's scored
    /// length (all positions after BOS through EOS).
    pub fn scored_mask(&self) -> Matrix {
        let t = self.max_len();
        let steps = t.saturating_sub(1);
        let mut m = Matrix::zeros(self.size(), steps);
        for (r, &len) in self.lens.iter().enumerate() {
            for c in 0..len.saturating_sub(1) {
                m.set(r, c, 1.0);
            }
        }
        m
    }

    /// Total number of scored positions in the batch.
    pub fn scored_total(&self) -> usize {
        self.lens.iter().map(|&l| l.saturating_sub(1)).sum()
    }
}

/// Seeded shuffle, then fixed-size chunks padded to the per-batch max
/// length; the final partial batch is kept.
pub fn make_batches(sequences: &[TokenSequence], batch_size: usize, rng: &mut Rng) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    rng.shuffle(&mut order);
    order
        .chunks(batch_size)
        .map(|chunk| {
            let refs: Vec<&TokenSequence> = chunk.iter().map(|&i| &sequences[i]).collect();
            Batch::from_sequences(&refs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BOS, EOS};

    fn seq(body: &[u32]) -> TokenSequence {
        let mut ids = vec![BOS];
        ids.extend_from_slice(body);
        ids.push(EOS);
        TokenSequence::new(ids, None)
    }

    #[test]
    fn batch_sizes_with_partial_tail() {
        let seqs: Vec<_> = (0..5).map(|_| seq(&[4, 5])).collect();
        let batches = make_batches(&seqs, 2, &mut Rng::new(1));
        let sizes: Vec<usize> = batches.iter().map(|b| b.size()).collect();
        assert_eq!(sizes, vec![2, 2, 1]);
    }

    #[test]
    fn uniform_lengths_have_no_pad() {
        let seqs: Vec<_> = (0..4).map(|_| seq(&[4, 5, 6])).collect();
        let batches = make_batches(&seqs, 2, &mut Rng::new(2));
        for b in &batches {
            assert!(b.ids.iter().flatten().all(|&id| id != PAD));
        }
    }

    #[test]
    fn mask_row_sum_is_scored_length() {
        let seqs = vec![seq(&[4, 5, 6]), seq(&[4])];
        let b = Batch::from_sequences(&seqs.iter().collect::<Vec<_>>());
        let m = b.scored_mask();
        // Row 0: len 5 => 4 scored; row 1: len 3 => 2 scored.
        let sum0: f64 = m.row(0).iter().sum();
        let sum1: f64 = m.row(1).iter().sum();
        assert_eq!(sum0, 4.0);
        assert_eq!(sum1, 2.0);
        assert_eq!(b.scored_total(), 6);
    }

    #[test]
    fn scored_mask_zero_exactly_on_pad_targets() {
        let seqs = vec![seq(&[4, 5, 6]), seq(&[4])];
        let b = Batch::from_sequences(&seqs.iter().collect::<Vec<_>>());
        let m = b.scored_mask();
        for r in 0..b.size() {
            for t in 0..b.max_len() - 1 {
                let target_is_pad = b.ids[r][t + 1] == PAD;
                assert_eq!(m.get(r, t) == 0.0, target_is_pad);
            }
        }
    }

    #[test]
    fn shuffle_is_seeded() {
        let seqs: Vec<_> = (0..20).map(|i| seq(&[4 + i % 5])).collect();
        let a = make_batches(&seqs, 4, &mut Rng::new(7));
        let b = make_batches(&seqs, 4, &mut Rng::new(7));
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.ids, y.ids);
        }
    }
}
