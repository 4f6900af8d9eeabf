use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid instance: {field}: {message}")]
    Validation { field: String, message: String },

    #[error("invalid generator config: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("destination {dest} unreachable from {source_node}")]
    Unreachable { source_node: u32, dest: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
