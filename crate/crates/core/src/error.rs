use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    Invalid(ValidationReport),
    #[error("impossible evidence: {0}")]
    ImpossibleEvidence(String),
    #[error("budget exceeded: {what} needs {count} but the limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
    },
    #[error("missing policy entry: {0}")]
    MissingEntry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
