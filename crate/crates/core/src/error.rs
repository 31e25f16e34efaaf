use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point variant does not match the system: {0}")]
    DomainMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported for this system kind: {0}")]
    Unsupported(String),
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("missing inverse: {0}")]
    MissingInverse(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("catalog error: {0}")]
    Catalog(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
