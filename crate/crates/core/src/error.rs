use thiserror::Error;

/// Errors raised by the simulation engines and file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("size overflow: {0}")]
    SizeOverflow(String),

    #[error("{what} needs {required} {unit}, which exceeds the cap of {cap} {unit}")]
    Budget {
        what: String,
        required: u128,
        cap: u64,
        unit: &'static str,
    },

    #[error("policy has no entry for outcome {0}")]
    MissingPolicy(String),

    #[error("invalid traversal plan: {0}")]
    Plan(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
