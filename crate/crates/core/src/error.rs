use std::path::PathBuf;

use crate::oracle::OracleError;

/// Errors surfaced by the pipelines and data tooling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the run cannot continue because the oracle backend is down
    /// or a strict replay cache lacks an entry.
    pub fn is_backend_unavailable(&self) -> bool {
        matches!(self, Error::Oracle(e) if e.is_unavailable())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
