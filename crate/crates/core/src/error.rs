//! Error types shared across the pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),

    /// An integrand was evaluated outside its declared validity region,
    /// e.g. the Buchstab argument dropped below 1.
    #[error("integrand undefined: {0}")]
    UndefinedIntegrand(String),

    /// `bisect_threshold` was called with `defined(hi) == false`.
    #[error("threshold not bracketed on [{lo}, {hi}]")]
    ThresholdNotBracketed { lo: f64, hi: f64 },

    /// A parameter tuple violates the constraints it must satisfy.
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    /// The linear system `(I - A) X = B` could not be solved.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A root finder was given an interval without a sign change.
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    /// Cache or dataset I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV read/write failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed cache or dataset contents.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn undefined(msg: impl Into<String>) -> Self {
        Error::UndefinedIntegrand(msg.into())
    }
}
