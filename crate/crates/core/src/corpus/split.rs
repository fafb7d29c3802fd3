use crate::corpus::{Label, TokenSequence};
use crate::error::{Error, Result};
use crate::math::Rng;

/// Disjoint, exhaustive train/validation/test partition of a record set.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: Vec<TokenSequence>,
    pub validation: Vec<TokenSequence>,
    pub test: Vec<TokenSequence>,
    pub seed: u64,
}

const TEST_FRACTION: f64 = 0.30;
const VALIDATION_FRACTION: f64 = 0.10;

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Split `count` items into per-class quotas proportional to class sizes,
/// hitting `count` exactly via largest fractional remainders.
fn per_class_quota(class_sizes: &[usize], count: usize) -> Vec<usize> {
    let total: usize = class_sizes.iter().sum();
    if total == 0 {
        return vec![0; class_sizes.len()];
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(class_sizes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(class_sizes.len());
    for (i, &n) in class_sizes.iter().enumerate() {
        let exact = count as f64 * n as f64 / total as f64;
        let base = exact.floor() as usize;
        quotas.push(base.min(n));
        remainders.push((i, exact - base as f64));
    }
    let mut assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut ri = 0;
    while assigned < count && ri < remainders.len() * 2 {
        let (class, _) = remainders[ri % remainders.len()];
        if quotas[class] < class_sizes[class] {
            quotas[class] += 1;
            assigned += 1;
        }
        ri += 1;
    }
    quotas
}

/// Seeded shuffle, then 70/30 train/test, then 10% of the initial train set
/// carved into validation. Stratified by label so class proportions are
/// preserved within ±1 per class.
pub fn split_dataset(records: Vec<TokenSequence>, seed: u64) -> Result<DatasetSplit> {
    let n = records.len();
    if n < 10 {
        return Err(Error::Config(format!(
            "need at least 10 records to split, got {n}"
        )));
    }

    // Group record indices by class; unlabeled data forms a single stratum.
    let classes: [Option<Label>; 3] = [None, Some(Label::Carrier), Some(Label::Stego)];
    let mut strata: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| {
            (0..n)
                .filter(|&i| records[i].label == *c)
                .collect::<Vec<_>>()
        })
        .collect();
    strata.retain(|s| !s.is_empty());

    let mut rng = Rng::sub(seed, "dataset-split");
    for s in &mut strata {
        rng.shuffle(s);
    }

    let sizes: Vec<usize> = strata.iter().map(|s| s.len()).collect();
    let test_total = round_half_up(TEST_FRACTION * n as f64);
    let test_quota = per_class_quota(&sizes, test_total);

    let mut test_idx = Vec::new();
    let mut initial_train: Vec<Vec<usize>> = Vec::new();
    for (s, &q) in strata.iter().zip(&test_quota) {
        test_idx.extend_from_slice(&s[..q]);
        initial_train.push(s[q..].to_vec());
    }

    let train_sizes: Vec<usize> = initial_train.iter().map(|s| s.len()).collect();
    let train_total: usize = train_sizes.iter().sum();
    let val_total = round_half_up(VALIDATION_FRACTION * train_total as f64);
    let val_quota = per_class_quota(&train_sizes, val_total);

    let mut val_idx = Vec::new();
    let mut train_idx = Vec::new();
    for (s, &q) in initial_train.iter().zip(&val_quota) {
        val_idx.extend_from_slice(&s[..q]);
        train_idx.extend_from_slice(&s[q..]);
    }

    // Deterministic order within each output set.
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    test_idx.sort_unstable();

    let mut slots: Vec<Option<TokenSequence>> = records.into_iter().map(Some).collect();
    let take = |idx: &[usize], slots: &mut Vec<Option<TokenSequence>>| {
        idx.iter()
            .map(|&i| slots[i].take().expect("index used twice"))
            .collect::<Vec<_>>()
    };
    let train = take(&train_idx, &mut slots);
    let validation = take(&val_idx, &mut slots);
    let test = take(&test_idx, &mut slots);
    debug_assert!(slots.iter().all(|s| s.is_none()));

    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}
