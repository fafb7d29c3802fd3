//! The shared neural architecture: embedding, multi-layer LSTM, projection
//! heads, with hand-written forward and backward passes (BPTT), plus the
//! finite-difference gradient checker and the checkpoint format.

mod backward;
mod checkpoint;
mod config;
mod forward;
mod gradcheck;
mod params;

pub use backward::{backward_sequence, TrunkGrads};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::ModelConfig;
pub use forward::{forward_sequence, BatchedState, ForwardCache, LayerStepCache, StepCache, StreamState};
pub use gradcheck::{grad_check, grad_check_on, tiny_config, GradTask};
pub use params::{init_head, Head, HeadKind, LayerParams, ModelParams, INIT_RANGE};

/// Default gradient-clipping threshold for all training loops.
pub const CLIP_NORM: f64 = 5.0;
