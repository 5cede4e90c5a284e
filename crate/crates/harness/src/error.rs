use std::path::PathBuf;

use slmap_core::SlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] SlError),
}

impl HarnessError {
    /// Process exit code: 2 configuration, 3 hypothesis violation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Read { .. } | HarnessError::Write { .. } => 2,
            HarnessError::Core(SlError::HypothesisViolated(_)) => 3,
            HarnessError::Core(SlError::InvalidProblem(_)) | HarnessError::Core(SlError::Format(_)) => 2,
            HarnessError::Core(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
