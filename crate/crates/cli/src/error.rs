use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error("{0}: invalid input: {1}")]
    Schema(String, #[source] serde_json::Error),
    #[error("{0}: instance violates hypotheses: {1}")]
    Hypotheses(String, String),
    #[error("csv: {0}")]
    Csv(#[source] csv::Error),
    #[error(transparent)]
    Core(#[from] hyperks::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
