use thiserror::Error;

/// Errors produced by the extraction and optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("BVH parse error at line {line}: {msg}")]
    Bvh { line: usize, msg: String },

    #[error("invalid skeleton: {0}")]
    Skeleton(String),

    #[error("invalid motion: {0}")]
    Motion(String),

    #[error("invalid script: {0}")]
    Script(String),

    #[error("unknown body part {0:?}; valid parts: RT, LA, LL, RL, RA, SP")]
    UnknownPart(String),

    #[error("unknown symbol {name:?} for part {part}; valid names: {valid}")]
    UnknownSymbol {
        name: String,
        part: String,
        valid: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite loss: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
