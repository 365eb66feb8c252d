use alloc::string::String;

/// Errors shared by every solver in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("red index {index} out of range ({len} reds)")]
    RedIndexOutOfRange { index: usize, len: usize },
    #[error("blue index {index} out of range ({len} blues)")]
    BlueIndexOutOfRange { index: usize, len: usize },
    #[error("infeasible: excess at vertex {vertex} cannot reach any deficit")]
    Infeasible { vertex: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = core::result::Result<T, Error>;
