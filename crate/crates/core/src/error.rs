use thiserror::Error;

#[derive(Debug, Error)]
pub enum VdmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    /// Malformed input file; `location` names the file and row/column.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl VdmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        VdmError::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        VdmError::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, VdmError>;
