use thiserror::Error;

/// Errors raised by the allocation and verification routines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown instance family `{0}`")]
    UnknownInstance(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration limit exceeded: {what} (limit {limit})")]
    EnumerationLimit { what: String, limit: usize },
    #[error("valuation class check failed: {0}")]
    ClassMismatch(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
