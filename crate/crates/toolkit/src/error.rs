use std::path::{Path, PathBuf};

/// Failures of the command-line tool, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: srcbias_core::Error,
    },
    #[error("{path}: no records")]
    EmptyFile { path: PathBuf },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] srcbias_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn parse(path: &Path, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }

    pub fn invalid(path: &Path, source: srcbias_core::Error) -> Self {
        Error::Invalid {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input or configuration, 1 for failures during the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Write { .. } => 1,
            Error::Core(e) if !e.is_validation() => 1,
            _ => 2,
        }
    }
}
