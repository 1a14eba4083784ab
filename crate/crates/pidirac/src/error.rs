use std::path::PathBuf;

use pidirac_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    /// A data file that parses but does not have the expected layout.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format { path: path.into(), message: message.into() }
    }

    /// Process exit code: 2 for bad input, 3 for data inconsistent with the
    /// known part, 4 for any other numerical failure. Exit code 1 is left for
    /// runs that complete but fail their checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.root_cause() {
                CoreError::InconsistentData { .. } => 3,
                CoreError::InvalidArgument(_) => 2,
                _ => 4,
            },
            _ => 2,
        }
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

pub fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Csv { path, source }
}
