use std::path::PathBuf;

/// Failures of the command-line layer. Everything except [`CliError::Internal`]
/// is an input error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {what}: {source}")]
    Json { what: String, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] divbound_core::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// Process exit code: 2 for bad input, 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) | CliError::Core(divbound_core::Error::Internal(_)) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
