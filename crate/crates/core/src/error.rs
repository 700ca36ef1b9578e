use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("truncation insufficient: need at least {required} terms ({what})")]
    Truncation { required: usize, what: String },
    #[error("tolerance {tol:e} not achievable: {reason}")]
    Precision { tol: f64, reason: String },
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
