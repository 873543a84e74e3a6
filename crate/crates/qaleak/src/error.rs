use std::io;
use std::path::PathBuf;

use qaleak_core::{AnnotationError, DatasetError, EvalError, NnError};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}:{line}: {source}", path.display())]
    Dataset { path: PathBuf, line: usize, source: DatasetError },
    #[error("{}: {message}", path.display())]
    Embedding { path: PathBuf, message: String },
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Error {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
