use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] rerank_core::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

/// Process exit status for each error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Runtime = 3,
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn parse(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost core error, if this error came from the core crate.
    pub fn core_root(&self) -> Option<&rerank_core::Error> {
        match self {
            Error::Core(e) => Some(e.root()),
            Error::Context { source, .. } => source.core_root(),
            _ => None,
        }
    }

    pub fn exit_status(&self) -> ExitStatus {
        use rerank_core::Error as E;
        match self {
            Error::Usage(_) => ExitStatus::Usage,
            Error::Io { .. } | Error::Parse { .. } => ExitStatus::Data,
            Error::Context { source, .. } => source.exit_status(),
            Error::Core(e) => match e.root() {
                E::Invalid(_) => ExitStatus::Usage,
                E::NonFinite(_) | E::Diverged { .. } => ExitStatus::Runtime,
                _ => ExitStatus::Data,
            },
        }
    }
}
