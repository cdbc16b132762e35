use thiserror::Error;

/// Errors produced by the matrix evaluators, simulators and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must have dimension at least 1")]
    EmptyMatrix,

    #[error("expected {expected} entries for a {n}x{n} matrix, got {got}")]
    ShapeMismatch { n: usize, expected: usize, got: usize },

    #[error("negative entry at ({row},{col}): {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("non-finite entry at ({row},{col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("not primitive: {0}")]
    NotPrimitive(String),

    #[error("type index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("row {row} sums to {sum}, expected 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("series truncation failed after {terms} terms: tail bound {bound:e} (ratio {ratio})")]
    Truncation {
        terms: usize,
        bound: f64,
        ratio: f64,
        partial: Vec<f64>,
    },

    #[error("linear system is singular or ill-conditioned (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("lambda {lambda} does not exceed the spectral radius of the stopped matrix")]
    LambdaTooSmall { lambda: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("population size {size} exceeded cap {cap}")]
    SizeCapExceeded { size: u64, cap: u64 },

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
