use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("frame has no valid keypoints")]
    ZeroValidKeypoints,

    #[error(
        "interval {interval} leaves no sequence of at least {min_len} frames in a clip of {clip_len} frames; short clips need a small interval such as 2 or 3"
    )]
    EmptyResult {
        interval: usize,
        min_len: usize,
        clip_len: usize,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("forward cache does not match the network it is used with")]
    StaleCache,

    #[error("class `{class}` has {clips} clips but the split needs at least {needed}")]
    TooFewClips {
        class: String,
        clips: usize,
        needed: usize,
    },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),
}
