use thiserror::Error;

/// Errors raised by the evaluators, fitting routines and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty data")]
    EmptyData,
    #[error("no observation reaches threshold {0}")]
    NoExceedances(u64),
    #[error("covariance unavailable: {0}")]
    CovarianceUnavailable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
