use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlaceError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("{}:{line}: {msg}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{}:{line}: unknown instance `{name}`", file.display())]
    Link {
        file: PathBuf,
        line: usize,
        name: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PlaceError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PlaceError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = PlaceError> = std::result::Result<T, E>;
