use alloc::boxed::Box;
use alloc::string::String;

/// Errors raised by model validation, spectral construction and the estimators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range (max {max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error(
        "cutoff too aggressive for this noise level: frequency index {index} needs exponent {exponent:.3} > guard {guard}"
    )]
    OverflowGuard {
        index: i64,
        exponent: f64,
        guard: f64,
    },

    #[error(
        "tensor path infeasible ({count} retained frequencies > {limit}); use the separable path"
    )]
    TensorInfeasible { count: usize, limit: usize },

    #[error("spectrum is not flagged as representing a real function")]
    NotRealSpectrum,

    #[error("at least two observations are required, got {0}")]
    TooFewObservations(usize),

    #[error("sensitivity sigma_f is zero at theta (critical point)")]
    CriticalPoint,

    #[error("mean of the base function under the theta law is not positive ({0})")]
    NonPositiveMean(f64),

    #[error("row alpha = {alpha}, K = {cutoff_k}: {source}")]
    InRow {
        alpha: f64,
        cutoff_k: usize,
        source: Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// The underlying error with row context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InRow { source, .. } => source.root(),
            other => other,
        }
    }
}
