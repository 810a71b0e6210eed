use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::arabic::TranslitError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Translit(#[from] TranslitError),

    /// A line-oriented input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("turn {dialogue}/{turn}: {message}")]
    InvalidTurn {
        dialogue: String,
        turn: String,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("position {position} out of range for a turn of {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }

    /// `true` for failures of the file system rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
