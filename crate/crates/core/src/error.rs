use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} is outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("cannot cut {requested} sequences: {detail}; at most {max_feasible} fit")]
    Capacity {
        requested: usize,
        max_feasible: usize,
        detail: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("relative drift undefined: {0}")]
    UndefinedDrift(String),

    #[error("sequence '{sequence}': {source}")]
    InSequence {
        sequence: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Nn(#[from] gatenav_nn::NnError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_sequence(self, sequence: &str) -> Self {
        Error::InSequence {
            sequence: sequence.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through sequence context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::InSequence { source, .. } => source.root(),
            other => other,
        }
    }
}
