//! Language-model training (next-word prediction with teacher forcing),
//! scoring (next-token distributions, Eq.-1 style perplexity, position-wise
//! perplexity), and perplexity separation reports.

mod objective;
mod report;
mod score;
mod train;

pub use objective::{lm_batch_loss, lm_batch_step};
pub(crate) use objective::{apply_lm_head_grads, lm_head_pass};
pub use report::{perplexity_report, rank_auc, PerplexityReport};
pub use score::{
    conditional_probs, lm_distribution, next_token_distribution, perplexity,
    positionwise_perplexity,
};
pub use train::{eval_mean, run_training, train_lm, LossCurves, TrainOptions, TrainOutcome};
