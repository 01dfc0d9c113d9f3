use thiserror::Error;

use crate::ItemId;

/// Errors raised by sketches, the oracle and the stream tooling.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sketch is empty")]
    Empty,

    #[error("item {0} is not monitored")]
    UnknownItem(ItemId),

    #[error("item {0} is already monitored")]
    AlreadyMonitored(ItemId),

    #[error("strict-model violation: {0}")]
    ModelViolation(String),

    #[error("operation not supported: {0}")]
    Unsupported(&'static str),

    #[error("item {item} is outside the universe of 2^{universe_bits}")]
    OutOfUniverse { item: ItemId, universe_bits: u32 },

    #[error("update weight must be +1 or -1, got {0}")]
    InvalidWeight(i64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SketchError {
    fn from(err: std::io::Error) -> Self {
        SketchError::Io(err.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> SketchError {
    SketchError::InvalidParameter(msg.into())
}

pub type Result<T, E = SketchError> = std::result::Result<T, E>;
