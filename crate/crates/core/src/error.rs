//! Crate-wide error type.

use thiserror::Error;

use crate::schreier::SchreierError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Schreier(#[from] SchreierError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("input exhausted: {0}")]
    Exhausted(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("parameter system: {0}")]
    Params(String),
    #[error("sigma registry: {0}")]
    Sigma(String),
    #[error("invalid functional at {path}: {reason}")]
    Functional { path: String, reason: String },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn pre(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
