use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the analysis core.
///
/// Everything except [`Error::NonFiniteLoss`] describes invalid input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty id")]
    EmptyId,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("`{id}` has no frames")]
    NoFrames { id: String },
    #[error("`{id}`: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("`{id}`: expected {expected} frames, found {found}")]
    FrameCount {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("`{id}` contains a non-finite value")]
    NonFinite { id: String },
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("missing counterpart for ids: {}", .0.join(", "))]
    MissingCounterpart(Vec<String>),
    #[error("query `{query}` has no relevance entry")]
    MissingRelevance { query: String },
    #[error("query `{query}`: relevant video `{video}` is not in the corpus")]
    RelevantNotFound { query: String, video: String },
    #[error("`{0}` pools to a zero vector")]
    DegenerateEmbedding(String),
    #[error("projection of `{0}` is the zero vector")]
    DegenerateProjection(String),
    #[error("`{id}`: frame index {index} out of range for {len} frames")]
    FrameIndex { id: String, index: usize, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("rank tables cover different query sets")]
    QuerySetMismatch,
    #[error("metric {0} missing from delta values")]
    MissingMetric(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}

impl Error {
    /// True for errors caused by the input rather than by the computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonFiniteLoss { .. })
    }
}
