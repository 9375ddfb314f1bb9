use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, unknown names, bad configs.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Evaluation left the domain of an operator (division by zero and friends).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// An operation was called outside its precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error(
        "zero-level cover exceeded {cap} boxes (iterations={iterations}, splits={splits}, split_dims={split_dims})"
    )]
    ResourceLimit {
        cap: usize,
        iterations: usize,
        splits: usize,
        split_dims: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
