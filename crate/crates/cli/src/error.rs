use std::fmt;
use std::path::PathBuf;

use gatenav::Error;

/// Errors surfaced by the command-line tool. Each class maps to its own
/// exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Results directories that cannot be combined into one report.
    Schema(String),
    /// Invalid combination of command-line arguments.
    Usage(String),
    Io { path: PathBuf, source: std::io::Error },
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Schema(_) => 13,
            CliError::Core(e) => match e.root() {
                Error::Io { .. } => 3,
                Error::Parse { .. } => 4,
                Error::Validation(_) => 5,
                Error::Config(_) => 6,
                Error::Capacity { .. } => 7,
                Error::InsufficientData(_) => 8,
                Error::Numeric(_) => 9,
                Error::Model(_) | Error::Nn(_) => 10,
                Error::OutOfRange { .. } => 11,
                Error::UndefinedDrift(_) => 12,
                Error::InSequence { .. } => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Schema(m) => write!(f, "incompatible results: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<gatenav_nn::NnError> for CliError {
    fn from(e: gatenav_nn::NnError) -> Self {
        CliError::Core(Error::Nn(e))
    }
}
