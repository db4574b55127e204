use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid hardware address `{0}`")]
    InvalidMac(String),
    #[error("anonymization salt must not be empty")]
    EmptySalt,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("held-out sampling failed: {0}")]
    HoldOut(String),
    #[error("empty held-out mask")]
    EmptyMask,
    #[error("partitions cover {left} and {right} nodes")]
    LengthMismatch { left: usize, right: usize },
    #[error("node {node} has no occurrences")]
    EmptyOccurrenceRow { node: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
}
