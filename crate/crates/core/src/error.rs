//! Error types shared across the crate.

use thiserror::Error;

/// Top-level failure modes of a scenario run. The CLI maps these onto
/// distinct exit codes (config 2, transport 3, contract violation 4).
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error at {field}: {message}")]
    Config { field: String, message: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("internal contract violation: {0}")]
    Contract(String),

    #[error("evaluation integrity: {0}")]
    Evaluation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> RunError {
        RunError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
