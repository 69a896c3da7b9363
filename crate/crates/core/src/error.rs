use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible combination of inputs, e.g. an edit distance on numeric rows.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A broken algorithmic invariant. Seeing one of these is a bug or a
    /// dissimilarity that violates its stated assumptions.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("score undefined: {0}")]
    UndefinedScore(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
