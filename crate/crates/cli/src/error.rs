use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or invalid input documents. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Network trouble, I/O failure or a refused request. Exit code 1.
    #[error("{0}")]
    Failed(String),
    /// A check did not pass; the full result still goes to stdout. Exit code 1.
    #[error("{reason}")]
    Rejected { reason: String, output: Value },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn failed(msg: impl Into<String>) -> Self {
        Self::Failed(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Failed(_) | Self::Rejected { .. } => 1,
        }
    }

    pub fn output(&self) -> Option<&Value> {
        match self {
            Self::Rejected { output, .. } => Some(output),
            _ => None,
        }
    }
}

impl From<fairlens_core::engine::EngineError> for CliError {
    fn from(e: fairlens_core::engine::EngineError) -> Self {
        Self::Usage(e.to_string())
    }
}
