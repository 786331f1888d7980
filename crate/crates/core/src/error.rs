use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    QuadratureNotConverged { estimate: f64, error_bound: f64 },

    #[error("time ordering violated: {0}")]
    TimeOrdering(String),

    #[error("path has no grid point at time {0}")]
    MissingGridPoint(f64),

    #[error("rejection budget exceeded after {tries} tries (acceptance rate {acceptance_rate:.3e})")]
    RejectionBudget { tries: usize, acceptance_rate: f64 },

    #[error("reference measures cannot be converted: {0}")]
    MeasureMismatch(String),

    #[error("eigen precondition violated: residual {residual:e} exceeds {tolerance:e}")]
    EigenPrecondition { residual: f64, tolerance: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("lambda_s / s is not constant: spread {spread:e} exceeds {tolerance:e}")]
    LinearityViolation { spread: f64, tolerance: f64 },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("sample grids differ: {0}")]
    GridMismatch(String),

    #[error("histogram window is empty or degenerate: {0}")]
    EmptyWindow(String),

    #[error("degenerate sample: need n >= 2, got {0}")]
    DegenerateSample(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
