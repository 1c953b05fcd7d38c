//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by dataset construction, the LP solver, and the
/// simulation harness.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("column {col} has zero scale (all entries are zero)")]
    ZeroScaleColumn { col: usize },

    #[error("column {col} is flagged as the intercept but is not identically one")]
    NotInterceptColumn { col: usize },

    #[error("quantile index {u} is outside the open interval (0, 1)")]
    InvalidQuantile { u: f64 },

    #[error("quantile grid is empty or not strictly increasing")]
    InvalidGrid,

    #[error("penalty level {lambda} is negative")]
    NegativePenalty { lambda: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("column index {col} out of range for p = {p}")]
    ColumnOutOfRange { col: usize, p: usize },

    #[error("simplex iteration limit of {limit} pivots exceeded{}", if *.perturbed { " (after perturbation restart)" } else { "" })]
    IterationLimit { limit: usize, perturbed: bool },

    #[error("numerical breakdown in {stage}: {detail}")]
    NumericalBreakdown { stage: &'static str, detail: String },

    #[error("singular system in {context}")]
    Singular { context: &'static str },

    #[error("exact enumeration budget exceeded: C({p}, {k}) > {budget} subsets")]
    BudgetExceeded { p: usize, k: usize, budget: u64 },

    #[error("matrix is not symmetric positive semidefinite within tolerance")]
    NotPsd,

    #[error("{failed} of {total} replications failed, above the 5% abort threshold")]
    ExcessiveFailures { failed: usize, total: usize },

    #[error("solver failed at u = {u}: {source}")]
    AtQuantile {
        u: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("solver failed at lambda = {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags an error with the quantile index at which it occurred.
    pub fn at_quantile(self, u: f64) -> Error {
        Error::AtQuantile {
            u,
            source: Box::new(self),
        }
    }

    /// Tags an error with the penalty level at which it occurred.
    pub fn at_lambda(self, lambda: f64) -> Error {
        Error::AtLambda {
            lambda,
            source: Box::new(self),
        }
    }
}
