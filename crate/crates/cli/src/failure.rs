//! Exit-code contract: 0 success, 2 usage or configuration error, 1 runtime
//! failure. Runtime diagnostics name the pipeline stage that failed.

use std::fmt;
use std::path::Path;

use slide_core::{SlideError, Stage};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime { stage: &'static str, message: String },
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn output(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime {
        stage: "output",
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Ingest => "ingest",
        Stage::Window => "window",
        Stage::Score => "score",
        Stage::Aggregate => "aggregate",
        Stage::Evaluate => "evaluate",
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime { .. } => EXIT_RUNTIME,
        }
    }
}

impl From<SlideError> for Failure {
    fn from(e: SlideError) -> Self {
        match e {
            SlideError::Config(_) | SlideError::UnknownTokenizer(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime {
                stage: stage_name(other.stage()),
                message: other.to_string(),
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Runtime { stage, message } => write!(f, "{stage} stage failed: {message}"),
        }
    }
}
