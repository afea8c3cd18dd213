use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{backend} backend unreachable: {reason}")]
    BackendUnreachable { backend: &'static str, reason: String },

    #[error("{backend} backend returned a malformed response (item {index:?}): {reason}")]
    MalformedResponse {
        backend: &'static str,
        index: Option<usize>,
        reason: String,
    },

    #[error("length mismatch at item {index}: expected {expected}, got {got}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("fill output for item {index} still contains [SLOT]")]
    SlotLeftUnfilled { index: usize },

    #[error("generator returned an empty completion for prompt {index}")]
    EmptyCompletion { index: usize },

    #[error("embedding dimension drift at item {index}: expected {expected}, got {got}")]
    DimensionDrift {
        index: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value at item {index}")]
    NonFinite { index: usize },

    #[error("score {value} at position {position} is outside [0, 1]")]
    ScoreOutOfRange { position: usize, value: f64 },

    #[error("training data is empty")]
    EmptyDataset,

    #[error("mask labels of pair {index} do not align with its source ({labels} labels, {tokens} tokens)")]
    LabelLengthMismatch {
        index: usize,
        labels: usize,
        tokens: usize,
    },

    #[error("edit script does not cover the source sequence: {0}")]
    CoverageMismatch(String),

    #[error("requested {requested} items but only {available} are available")]
    NTooLarge { requested: usize, available: usize },

    #[error("requested top-{k} demonstrations from a corpus of {available}")]
    KTooLarge { k: usize, available: usize },

    #[error("at least one demonstration is required")]
    EmptyDemos,

    #[error("could not extract a completion from the generator output")]
    ExtractionFailure,

    #[error("invalid style label {0:?}")]
    InvalidStyle(String),

    #[error("invalid transfer direction: {0}")]
    InvalidDirection(String),

    #[error("non-finite metric input: {0}")]
    NonFiniteInput(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: file contains no sentences")]
    EmptyFile(PathBuf),

    #[error("reference file has {refs} lines but the source file has {sources}")]
    RefLengthMismatch { sources: usize, refs: usize },

    #[error("misaligned inputs: {0}")]
    MisalignedInputs(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input or configuration rather than a
    /// runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidStyle(_)
                | Error::InvalidDirection(_)
                | Error::NTooLarge { .. }
                | Error::KTooLarge { .. }
                | Error::Parse(_)
        )
    }
}
