use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A division by a quantity at or below the singularity tolerance.
    #[error("singular map: {0}")]
    Singularity(String),

    #[error("index {index} out of range 0..={max}")]
    Index { index: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed to converge: estimate {estimate:e}, error {error:e}, tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("density undefined for {0}")]
    UndefinedDensity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
