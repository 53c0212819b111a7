use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch on {axis}: expected {expected}, found {found}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("entry ({row}, {col}) = {value} is not a valid {family} response")]
    InvalidResponse {
        family: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge within {iterations} iterations")]
    SvdNoConvergence { iterations: usize },

    #[error("singular values are not sorted in non-increasing order at index {index}")]
    UnsortedSingularValues { index: usize },

    #[error("objective diverged after {} iterations", trace.len())]
    Diverged { trace: Vec<f64> },

    #[error("AUC undefined: {zeros} zero and {positives} positive entries in the index set")]
    AucUndefined { zeros: usize, positives: usize },

    #[error("reference matrix has zero Frobenius norm")]
    ZeroReference,

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidResponse { .. }
            | Error::InvalidArgument(_)
            | Error::UnsortedSingularValues { .. }
            | Error::Parse { .. }
            | Error::Io { .. } => ErrorKind::Input,
            Error::NonFinite(_)
            | Error::SvdNoConvergence { .. }
            | Error::Diverged { .. }
            | Error::ZeroReference => ErrorKind::Numerical,
            Error::AucUndefined { .. } => ErrorKind::AucUndefined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
    AucUndefined,
}
