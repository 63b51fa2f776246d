use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("input too large for exhaustive enumeration: {0}")]
    OracleGuard(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
