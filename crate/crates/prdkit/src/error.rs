use std::path::Path;

use thiserror::Error;

/// Failures surfaced by the IO layer, the experiment runners and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad or inconsistent flags and configuration values.
    #[error("{0}")]
    Usage(String),
    /// A file could not be decoded.
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// A numeric precondition of the estimators failed.
    #[error("{context}{source}")]
    Numeric {
        context: String,
        #[source]
        source: prdkit_core::Error,
    },
}

impl Error {
    /// Process exit code: 2 for flags, 3 for input files, 4 for numeric preconditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Numeric { .. } => 4,
        }
    }

    pub fn parse(path: &Path, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.display().to_string(), msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl From<prdkit_core::Error> for Error {
    fn from(source: prdkit_core::Error) -> Self {
        Error::Numeric { context: String::new(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attaches the name of the failing input to core errors.
pub(crate) trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T>;
}

impl<T> Context<T> for std::result::Result<T, prdkit_core::Error> {
    fn context(self, what: impl std::fmt::Display) -> Result<T> {
        self.map_err(|source| Error::Numeric { context: format!("{what}: "), source })
    }
}
