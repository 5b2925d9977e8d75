use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky factorization failed even at the largest allowed jitter.
    #[error(
        "covariance not positive definite (n = {size}, jitter tried up to {max_jitter:.3e}, \
         mean diagonal {mean_diag:.3e}, min pivot {min_pivot:.3e})"
    )]
    NotPositiveDefinite {
        size: usize,
        max_jitter: f64,
        mean_diag: f64,
        min_pivot: f64,
    },

    /// Every optimizer restart failed.
    #[error("hyperparameter optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
