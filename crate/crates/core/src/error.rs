//! Error types shared across the crate.

use thiserror::Error;

/// Errors reported by the channel model, measurement, and estimator layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter failed validation (zero size, non-positive tolerance, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A physical angle fell outside [-pi/2, pi/2].
    #[error("angle {0} rad is outside [-pi/2, pi/2]")]
    AngleOutOfRange(f64),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A least-squares system had (numerically) dependent columns.
    #[error("least-squares system is rank deficient")]
    SingularSystem,

    /// Rank deficiency surfaced inside a greedy iteration.
    #[error("rank-deficient least-squares system at iteration {iteration}")]
    SingularAtIteration { iteration: usize },

    /// Inputs to an interpolation step were degenerate (all zero, vanishing
    /// denominator, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A peak landed where the synthesized kernel value is too small to invert.
    #[error("degenerate peak geometry: {0}")]
    DegenerateGeometry(String),

    /// Scenario generation could not satisfy its constraints.
    #[error("scenario generation failed: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
