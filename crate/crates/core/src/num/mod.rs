//! Deterministic numeric substrate: dense matrices, Cholesky, MLPs with
//! reverse-mode gradients, Adam and the seeded PRNG.

mod adam;
mod matrix;
mod mlp;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use matrix::{
    backward_substitute_t, cholesky, cholesky_inverse, cholesky_log_det, cholesky_solve, dot,
    forward_substitute, Matrix,
};
pub use mlp::{Activation, Layer, MlpCache, MlpGrads, MlpParams};
pub use rng::Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
}
