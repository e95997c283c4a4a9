//! From-scratch dense networks: forward/backward passes, action
//! distributions, Adam, a finite-difference gradient oracle and checkpoints.

mod adam;
pub mod checkpoint;
mod dist;
pub mod gradcheck;
mod mlp;

use thiserror::Error;

pub use adam::{adam_step, AdamState};
pub use checkpoint::Checkpoint;
pub use dist::{gaussian_log_density, CategoricalDist, DiagGaussianDist};
pub use gradcheck::{compare_gradients, gradient_check, random_gradcheck, GradcheckReport, MixedLoss, OutputLoss};
pub use mlp::{softmax, Head, Mlp, MlpGrads, Trace};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid architecture {0:?}")]
    InvalidArchitecture(Vec<usize>),
    #[error("non-finite gradient {value} in tensor {tensor} at index {index}")]
    NonFiniteGradient { tensor: usize, index: usize, value: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("action {action} out of range for {n} choices")]
    InvalidAction { action: usize, n: usize },
    #[error("log-probability requested for zero-probability action {0}")]
    ZeroProbability(usize),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
