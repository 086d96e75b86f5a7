use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the operation's domain (bad hue, digit, shape...).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("dataset construction error: {0}")]
    Construction(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("training diverged at step {step}: {detail}")]
    Divergence { step: u64, detail: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Tensor(#[from] autograd::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
