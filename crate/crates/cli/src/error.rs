use std::fmt::Display;

use thiserror::Error;

use namescale::CorpusError;

/// A failure tagged with the stage that raised it. Each kind maps to one
/// process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage}: {message}")]
    Validation { stage: String, message: String },
    #[error("{stage}: {message}")]
    Data { stage: String, message: String },
    #[error("{stage}: internal invariant violated: {message}")]
    Invariant { stage: String, message: String },
}

impl CliError {
    pub fn validation(stage: &str, message: impl Display) -> Self {
        CliError::Validation {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    pub fn data(stage: &str, message: impl Display) -> Self {
        CliError::Data {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    pub fn invariant(stage: &str, message: impl Display) -> Self {
        CliError::Invariant {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    /// Synthetic-config errors are validation failures; everything else a
    /// corpus can raise is bad input data.
    pub fn from_corpus(stage: &str, e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidConfig(_) => CliError::validation(stage, e),
            other => CliError::data(stage, other),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Data { .. } => 3,
            CliError::Invariant { .. } => 4,
        }
    }
}
