use thiserror::Error;

use crate::corpus::CorpusError;
use crate::embedstore::EmbdError;
use crate::lingo::WordNetError;
use crate::metrics::MetricsError;
use crate::retrieval::RetrievalError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes; each maps to one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Usage,
    Parse,
    Coverage,
    Format,
    Io,
    Integrity,
    Metadata,
}

impl ErrorClass {
    /// Exit code documented in the README.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 2,
            ErrorClass::Parse => 3,
            ErrorClass::Coverage => 4,
            ErrorClass::Format => 5,
            ErrorClass::Io => 6,
            ErrorClass::Integrity => 7,
            ErrorClass::Metadata => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    WordNet(#[from] WordNetError),
    #[error(transparent)]
    Embd(#[from] EmbdError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("report metadata mismatch: {0}")]
    Metadata(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON document: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Corpus(e) => match e {
                CorpusError::UnknownSplit(_) => ErrorClass::Usage,
                CorpusError::Io { .. } => ErrorClass::Io,
                CorpusError::UnknownId(_) | CorpusError::DuplicateId(_) => ErrorClass::Integrity,
                CorpusError::EmptySplit { .. } => ErrorClass::Usage,
                CorpusError::Parse { .. } | CorpusError::Schema { .. } => ErrorClass::Parse,
            },
            Error::WordNet(e) => match e {
                WordNetError::Io { .. } => ErrorClass::Io,
                WordNetError::Parse { .. } => ErrorClass::Parse,
                WordNetError::Integrity(_) => ErrorClass::Integrity,
            },
            Error::Embd(e) => match e {
                EmbdError::Io(_) => ErrorClass::Io,
                _ => ErrorClass::Format,
            },
            Error::Retrieval(e) => match e {
                RetrievalError::Coverage { .. } | RetrievalError::MissingId(_) => ErrorClass::Coverage,
                _ => ErrorClass::Format,
            },
            Error::Metrics(_) => ErrorClass::Coverage,
            Error::Usage(_) => ErrorClass::Usage,
            Error::Metadata(_) => ErrorClass::Metadata,
            Error::Io { .. } => ErrorClass::Io,
            Error::Json { .. } => ErrorClass::Parse,
        }
    }
}
