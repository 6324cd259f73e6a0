use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage an error originated from. The CLI uses this to name the
/// failing stage in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Window,
    Score,
    Aggregate,
    Evaluate,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Ingest => "ingest",
            Stage::Window => "window",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum SlideError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Corpus(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {what} has {actual} sentences, expected {expected}")]
    LengthMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("unknown tokenizer `{0}`")]
    UnknownTokenizer(String),

    #[error("token counts missing for {doc_id}#{index}")]
    MissingTokenCount { doc_id: String, index: usize },

    #[error("duplicate request id {0} in batch")]
    DuplicateRequestId(u64),

    #[error("scorer session failed: {0}")]
    Scorer(String),

    #[error("scorer timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("no chunks to aggregate: {0}")]
    EmptyAggregate(String),

    #[error("{0}")]
    Evaluation(String),
}

impl SlideError {
    pub fn stage(&self) -> Stage {
        match self {
            SlideError::Io { .. }
            | SlideError::Format { .. }
            | SlideError::Corpus(_)
            | SlideError::MissingTokenCount { .. } => Stage::Ingest,
            SlideError::Config(_)
            | SlideError::LengthMismatch { .. }
            | SlideError::UnknownTokenizer(_) => Stage::Window,
            SlideError::DuplicateRequestId(_) | SlideError::Scorer(_) | SlideError::Timeout(_) => {
                Stage::Score
            }
            SlideError::EmptyAggregate(_) => Stage::Aggregate,
            SlideError::Evaluation(_) => Stage::Evaluate,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SlideError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        SlideError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = SlideError> = std::result::Result<T, E>;
