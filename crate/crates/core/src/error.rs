use thiserror::Error;

/// Errors raised across the solver stack.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} outside {range}")]
    Index { index: String, range: String },

    #[error("state error: {0}")]
    State(String),

    #[error("singular matrix: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    Convergence { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("numeric failure: {message} (estimate {estimate:e})")]
    Numeric { message: String, estimate: f64 },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("step at level {level} failed: {source}")]
    Step {
        level: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    pub(crate) fn at_level(self, level: f64) -> Self {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step { level, source: Box::new(e) },
        }
    }

    /// True for failures of a linear solve, possibly wrapped in a step error.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::Convergence { .. } | Error::Numeric { .. } => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
