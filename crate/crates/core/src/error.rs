use thiserror::Error;

/// Errors raised while designing, detecting, or simulating SCMA systems.
#[derive(Debug, Error)]
pub enum ScmaError {
    /// A parameter violates an operation precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Overlap was requested between a signature and itself.
    #[error("overlap is only defined for distinct layer signatures")]
    Identity,

    /// A search over a design space found no admissible candidate.
    #[error("no candidate found: {0}")]
    NotFound(String),

    /// Exhaustive enumeration would exceed the configured limit.
    #[error("enumeration of {hypotheses} joint hypotheses exceeds the limit of {limit}")]
    Capacity { hypotheses: u128, limit: u128 },

    /// The detector mode is not applicable to this system or channel.
    #[error("detector mode not applicable: {0}")]
    Mode(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ScmaError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScmaError::Parameter(msg.into()))
}
