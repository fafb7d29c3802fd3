//! Binary carrier/stego classification: initialization from pre-trained
//! checkpoints (or random), fine-tuning, batched scoring, the perplexity
//! threshold baseline, and Acc/F1 metrics.

mod classifier;
mod metrics;
mod threshold;

pub use classifier::{
    classify, classify_all, clf_batch_loss, clf_batch_step, epochs_to_threshold, finetune,
    init_classifier, InitMode,
};
pub use metrics::{evaluate, MetricsReport};
pub use threshold::{fit_threshold, Direction, ThresholdDetector};
