use thiserror::Error;

/// Errors raised by the screening toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// A matrix that must be invertible is (numerically) singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Design columns (0-based) that are linearly dependent on each other or
    /// on the intercept.
    #[error("rank-deficient design: collinear columns {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("no screenable predictors: every column is flagged")]
    NoScreenablePredictors,

    /// The population fixed-point solver did not settle.
    #[error("no convergence after {iterations} iterations (last beta0 = {last_beta0}, last beta = {last_beta:?})")]
    NoConvergence {
        iterations: usize,
        last_beta0: f64,
        last_beta: Vec<f64>,
    },

    /// An internal consistency check failed; this indicates a bug rather
    /// than bad input.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("{path}: line {line}, column '{column}': {message}")]
    Csv {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True when the error signals a bug in this crate rather than a problem
    /// with the caller's input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::InvariantViolation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
