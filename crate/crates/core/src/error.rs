//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Offspring law violates its invariants (negative mass, zero first
    /// moment, empty support).
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    /// Argument outside the documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Rejection sampler exhausted its retry budget.
    #[error("retry budget exhausted after {attempts} attempts: {what}")]
    RetryExhausted { what: String, attempts: usize },

    /// A simulated coordinate left the finite range (NaN or |x| > guard).
    #[error("simulation diverged at step {step} (vertex {vertex})")]
    Diverged { step: usize, vertex: usize },

    /// Requested time is not a grid point.
    #[error("time {t} is not on the grid (horizon {horizon}, {steps} steps)")]
    OffGrid { t: f64, horizon: f64, steps: usize },

    /// Regression asked for more neighbors than the ensemble provides.
    #[error("insufficient ensemble: need {needed} design points, have {have}")]
    InsufficientEnsemble { needed: usize, have: usize },

    /// A statistical checker lacks the occupancy its binning requires.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Diffusion coefficient not invertible at an evaluation point.
    #[error("singular diffusion coefficient at step {step}")]
    SingularDiffusion { step: usize },

    /// Comparison between systems with different coefficients.
    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    /// Mass-transport test function broke its declared bound.
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    /// A runtime-validated coefficient contract failed.
    #[error("coefficient contract violated: {0}")]
    ContractViolation(String),

    #[error("serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
