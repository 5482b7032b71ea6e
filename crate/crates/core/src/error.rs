use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A data invariant does not hold (duplicate ids, dangling judgments, ...).
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unknown {kind} `{id}`")]
    Missing { kind: &'static str, id: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("training samples are `{found}` but the requested loss is `{expected}`")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("non-finite loss at step {step} (batch: {batch})")]
    Diverged { step: usize, batch: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn missing(kind: &'static str, id: impl Into<String>) -> Self {
        Error::Missing { kind, id: id.into() }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
