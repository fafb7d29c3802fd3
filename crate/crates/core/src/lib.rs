//! Workbench for LM-driven text steganography and steganalysis.
//!
//! The pipeline: train an LSTM language model, embed secret bits during
//! generation (Bins / fixed-length / variable-length Huffman coding),
//! pre-train steganalysis models on carrier texts (language-model or
//! sequence-autoencoder objectives), fine-tune a binary carrier/stego
//! classifier, and report perplexity separations, Acc/F1 grids, and
//! loss-convergence comparisons.
//!
//! The numeric kernel in [`math`] is generic over its scalar type; the rest
//! of the crate works through the `f64` aliases below, which is also the
//! precision of the on-disk checkpoint format.

pub mod autoencoder;
pub mod codec;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod lm;
pub mod lstm;
pub mod math;
pub mod steganalyzer;

pub use error::{Error, Result};

/// Dense 2-D array of 64-bit floats, the universal numeric carrier.
pub type Matrix = math::Mat<f64>;
/// Trainable tensor (value + grad + Adam moments) at f64 precision.
pub type ParamBlock = math::Param<f64>;
/// Adam hyperparameters at f64 precision.
pub type AdamConfig = math::AdamHyper<f64>;
