//! Deterministic numeric primitives: matrices with pinned summation order,
//! stable softmax / cross-entropy, Adam, a seeded PRNG, and bit streams.
//!
//! Everything here is generic over the [`Scalar`] type; the crate root pins
//! `f64` aliases for the model stack.

mod adam;
mod bits;
mod matrix;
mod ops;
mod rng;

pub use adam::{clip_global_norm, AdamHyper, Param};
pub use bits::BitStream;
pub use matrix::{add_bias_rows, col_sums, matmul, matmul_at, matmul_bt, Mat, Scalar};
pub use ops::{argmax, cross_entropy, softmax_row, softmax_rows_in_place, PROB_FLOOR};
pub use rng::{fnv1a64, Rng};
