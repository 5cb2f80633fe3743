use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        count: usize,
    },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("missing ground truth cells: {0}")]
    MissingCells(String),

    #[error("both classes are required for balanced sampling ({positives} positives, {negatives} negatives)")]
    MissingClass { positives: usize, negatives: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for internal invariant violations, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Invariant(_) => 2,
            _ => 1,
        }
    }
}
