//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A dataset line could not be decoded.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Data disagrees with the concept schema it claims to follow.
    #[error("schema error: {0}")]
    Schema(String),
    /// Internally inconsistent data (duplicate ids, corrupt files).
    #[error("integrity error: {0}")]
    Integrity(String),
    /// An invalid configuration value or combination.
    #[error("configuration error: {0}")]
    Config(String),
    /// Too little data for the requested operation.
    #[error("size error: {0}")]
    Size(String),
    /// A numeric input outside its documented domain.
    #[error("value error: {0}")]
    Value(String),
    /// Training diverged or was asked to do something impossible.
    #[error("training error: {0}")]
    Training(String),
    /// A gradient went NaN/Inf; names the offending parameter block.
    #[error("training error: non-finite gradient in parameter block {block}")]
    NonFiniteGradient { block: &'static str },
    /// An operation was called on an object in the wrong state.
    #[error("state error: {0}")]
    State(String),
    /// The caller violated an operation's contract.
    #[error("contract error: {0}")]
    Contract(String),
    /// A statistical test could not be computed (degenerate inputs).
    #[error("statistical error: {0}")]
    Statistical(String),
    /// A checkpoint file is unreadable or from an unsupported version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
