use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for each failure class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Usage = 1,
    Input = 2,
    Internal = 3,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n{}", bullet_list(.0))]
    Config(Vec<String>),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("artifacts from different configurations: {0}")]
    MixedArtifacts(String),
    #[error(transparent)]
    Analysis(groupscan_core::Error),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn bullet_list(items: &[String]) -> String {
    items.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn input(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Input { path: path.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Usage(_) | CliError::Config(_) => ExitStatus::Usage,
            CliError::Invariant(_) => ExitStatus::Internal,
            _ => ExitStatus::Input,
        }
    }
}

impl From<groupscan_core::Error> for CliError {
    fn from(e: groupscan_core::Error) -> Self {
        match e {
            groupscan_core::Error::Invariant(m) => CliError::Invariant(m),
            other => CliError::Analysis(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
