use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("shape leaves frame bounds at frame {frame}")]
    OutOfBounds { frame: usize },

    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),

    #[error("invalid homography: {0}")]
    InvalidHomography(String),

    #[error("window size error: expected {expected} frames, got {got}")]
    WindowSize { expected: usize, got: usize },

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid training data: {0}")]
    TrainingData(String),

    #[error("feature length mismatch: model expects {expected}, got {got}")]
    FeatureLength { expected: usize, got: usize },

    #[error("symbol {symbol} out of range (alphabet size {alphabet})")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty intersection between window and frame")]
    EmptyWindow,

    #[error("pipeline assembly error: {0}")]
    Assembly(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("placement search over {tasks} tasks exceeds the exhaustive bound of {bound}; heuristic placement is not supported")]
    PlacementBound { tasks: usize, bound: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
