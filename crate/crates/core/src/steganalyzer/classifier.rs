use crate::corpus::{Batch, Label, TokenSequence};
use crate::error::{Error, Result};
use crate::lm::{run_training, LossCurves, TrainOptions};
use crate::lstm::{
    backward_sequence, forward_sequence, init_head, BatchedState, Checkpoint, Head, HeadKind,
    ModelConfig, ModelParams, StreamState, TrunkGrads,
};
use crate::math::{
    add_bias_rows, col_sums, matmul, matmul_at, matmul_bt, softmax_rows_in_place, Rng, PROB_FLOOR,
};


/// How the classifier trunk is initialized before fine-tuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMode {
    Random,
    FromLm,
    FromAe,
}

impl InitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitMode::Random => "random",
            InitMode::FromLm => "lm",
            InitMode::FromAe => "ae",
        }
    }
}

/// Build classifier parameters: embedding + LSTM copied from a pre-trained
/// checkpoint (or randomly initialized), with the two-way head always
/// randomly initialized. Only initialization differs between modes; the
/// fine-tuning code path is shared.
pub fn init_classifier(
    config: &ModelConfig,
    mode: InitMode,
    source: Option<&Checkpoint>,
    seed: u64,
) -> Result<ModelParams> {
    match mode {
        InitMode::Random => {
            if source.is_some() {
                return Err(Error::Config(
                    "random init does not take a source checkpoint".into(),
                ));
            }
            Ok(ModelParams::init(
                config,
                HeadKind::Binary,
                &mut Rng::sub(seed, "classifier-init"),
            ))
        }
        InitMode::FromLm | InitMode::FromAe => {
            let ck = source.ok_or_else(|| {
                Error::Config("pre-trained init needs a source checkpoint".into())
            })?;
            if ck.config.vocab_size != config.vocab_size
                || ck.config.embed_dim != config.embed_dim
                || ck.config.hidden_dim != config.hidden_dim
                || ck.config.layers != config.layers
            {
                return Err(Error::Checkpoint(format!(
                    "checkpoint architecture {:?} does not match classifier config {:?}",
                    ck.config, config
                )));
            }
            let mut params = ModelParams {
                embedding: crate::ParamBlock::new(ck.params.embedding.value.clone()),
                layers: ck
                    .params
                    .layers
                    .iter()
                    .map(|l| crate::lstm::LayerParams {
                        w_in: crate::ParamBlock::new(l.w_in.value.clone()),
                        w_rec: crate::ParamBlock::new(l.w_rec.value.clone()),
                        bias: crate::ParamBlock::new(l.bias.value.clone()),
                    })
                    .collect(),
                head: init_head(
                    config,
                    HeadKind::Binary,
                    &mut Rng::sub(seed, "classifier-head"),
                ),
            };
            params.check_shapes(config)?;
            params.zero_grads();
            Ok(params)
        }
    }
}

fn binary_head(params: &ModelParams) -> Result<(&crate::ParamBlock, &crate::ParamBlock)> {
    match &params.head {
        Head::Binary { fc, bias } => Ok((fc, bias)),
        Head::Lm { .. } => Err(Error::State("classifier needs a binary head".into())),
    }
}

fn label_index(label: Label) -> usize {
    match label {
        Label::Carrier => 0,
        Label::Stego => 1,
    }
}

fn batch_labels(batch: &Batch) -> Result<&[Label]> {
    batch
        .labels
        .as_deref()
        .ok_or_else(|| Error::Config("classifier batch needs labels".into()))
}

/// Mean cross-entropy of the two-way softmax on the last hidden vector.
pub fn clf_batch_loss(
    params: &ModelParams,
    config: &ModelConfig,
    batch: &Batch,
) -> Result<(f64, usize)> {
    let labels = batch_labels(batch)?;
    let cache = forward_sequence(params, config, batch, None, None)?;
    let (fc, bias) = binary_head(params)?;
    let h_last = cache.final_state.h.last().expect("layers >= 1");
    let mut probs = matmul_bt(h_last, &fc.value)?;
    add_bias_rows(&mut probs, &bias.value)?;
    softmax_rows_in_place(&mut probs)?;
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        loss += -probs.get(r, label_index(label)).max(PROB_FLOOR).ln();
    }
    Ok((loss / batch.size() as f64, batch.size()))
}

/// One fine-tuning step: forward (dropout optional), two-way cross-entropy
/// on the final hidden state, gradients through head and trunk.
pub fn clf_batch_step(
    params: &mut ModelParams,
    config: &ModelConfig,
    batch: &Batch,
    dropout_rng: Option<&mut Rng>,
) -> Result<(f64, usize)> {
    let labels = batch_labels(batch)?.to_vec();
    let b = batch.size();
    let cache = forward_sequence(params, config, batch, None, dropout_rng)?;
    let h_last = cache.final_state.h.last().expect("layers >= 1").clone();

    let (loss, dlogits) = {
        let (fc, bias) = binary_head(params)?;
        let mut probs = matmul_bt(&h_last, &fc.value)?;
        add_bias_rows(&mut probs, &bias.value)?;
        softmax_rows_in_place(&mut probs)?;
        let mut loss = 0.0;
        let mut d = probs;
        let inv_b = 1.0 / b as f64;
        for (r, &label) in labels.iter().enumerate() {
            let target = label_index(label);
            loss += -d.get(r, target).max(PROB_FLOOR).ln();
            let row = d.row_mut(r);
            row[target] -= 1.0;
            row[0] *= inv_b;
            row[1] *= inv_b;
        }
        (loss * inv_b, d)
    };

    let d_h_last = {
        let (fc, bias) = match &mut params.head {
            Head::Binary { fc, bias } => (fc, bias),
            Head::Lm { .. } => unreachable!("checked above"),
        };
        fc.grad.add_assign(&matmul_at(&dlogits, &h_last)?)?;
        bias.grad.add_assign(&col_sums(&dlogits))?;
        matmul(&dlogits, &fc.value)?
    };

    let mut d_final = BatchedState::zeros(config, b);
    *d_final.h.last_mut().expect("layers >= 1") = d_h_last;
    backward_sequence(
        params,
        config,
        batch,
        &cache,
        TrunkGrads {
            dh_top: Vec::new(),
            d_final: Some(d_final),
        },
    )?;
    Ok((loss, b))
}

/// Two-way probabilities for one text; streaming path, identical to the
/// batched scorer bit for bit.
pub fn classify(
    params: &ModelParams,
    config: &ModelConfig,
    seq: &TokenSequence,
) -> Result<(Label, [f64; 2])> {
    let (fc, bias) = binary_head(params)?;
    let state = StreamState::over(params, config, &seq.ids)?;
    let h = state.top_h();
    let mut logits = [0.0f64; 2];
    for (j, l) in logits.iter_mut().enumerate() {
        let w = fc.value.row(j);
        let mut acc = 0.0;
        for (hv, wv) in h.iter().zip(w) {
            acc += hv * wv;
        }
        *l = acc + bias.value.get(0, j);
    }
    let probs = crate::math::softmax_row(&logits)?;
    // Exact tie goes to carrier.
    let label = if probs[1] > 0.5 {
        Label::Stego
    } else {
        Label::Carrier
    };
    Ok((label, [probs[0], probs[1]]))
}

/// Batched scoring of many texts (read-only, deterministic).
pub fn classify_all(
    params: &ModelParams,
    config: &ModelConfig,
    texts: &[TokenSequence],
    batch_size: usize,
) -> Result<Vec<(Label, [f64; 2])>> {
    let (fc, bias) = binary_head(params)?;
    let mut out = Vec::with_capacity(texts.len());
    let idx: Vec<usize> = (0..texts.len()).collect();
    for chunk in idx.chunks(batch_size) {
        let refs: Vec<&TokenSequence> = chunk.iter().map(|&i| &texts[i]).collect();
        let batch = Batch::from_sequences(&refs);
        let cache = forward_sequence(params, config, &batch, None, None)?;
        let h_last = cache.final_state.h.last().expect("layers >= 1");
        let mut probs = matmul_bt(h_last, &fc.value)?;
        add_bias_rows(&mut probs, &bias.value)?;
        softmax_rows_in_place(&mut probs)?;
        for r in 0..batch.size() {
            let p = [probs.get(r, 0), probs.get(r, 1)];
            let label = if p[1] > 0.5 {
                Label::Stego
            } else {
                Label::Carrier
            };
            out.push((label, p));
        }
    }
    Ok(out)
}

/// Fine-tune a classifier on labeled train/val sets. Early stopping via
/// `opts.patience`; the best-validation parameters are returned.
pub fn finetune(
    params: ModelParams,
    config: &ModelConfig,
    train: &[TokenSequence],
    val: &[TokenSequence],
    opts: &TrainOptions,
) -> Result<(ModelParams, LossCurves, usize)> {
    let classes: std::collections::HashSet<Label> =
        train.iter().filter_map(|t| t.label).collect();
    if classes.len() < 2 {
        return Err(Error::Config(
            "fine-tuning needs both carrier and stego examples in train".into(),
        ));
    }
    let outcome = run_training(
        params,
        config,
        train,
        val,
        opts,
        |p, c, b, rng| clf_batch_step(p, c, b, rng),
        |p, c, b| clf_batch_loss(p, c, b),
    )?;
    Ok((outcome.params, outcome.curves, outcome.epochs_ran))
}

/// Helper for loss-curve comparisons: first 1-based epoch whose validation
/// loss is at or below `threshold`; `epochs + 1` when never reached.
pub fn epochs_to_threshold(val_curve: &[f64], threshold: f64) -> usize {
    val_curve
        .iter()
        .position(|&v| v <= threshold)
        .map(|i| i + 1)
        .unwrap_or(val_curve.len() + 1)
}
