use thiserror::Error;

/// Errors raised anywhere in the reliability pipeline.
#[derive(Debug, Error)]
pub enum RgcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: `{field}` {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("training diverged: {0}")]
    TrainingDiverged(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("parse error in {context}: {detail}")]
    Parse { context: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RgcError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        RgcError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        RgcError::InvalidInput(msg.into())
    }

    pub fn parse(context: impl Into<String>, detail: impl ToString) -> Self {
        RgcError::Parse {
            context: context.into(),
            detail: detail.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RgcError>;
