use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("grid of {size} points is too coarse: need more than {required} points for exact quadrature")]
    GridTooCoarse { size: u64, required: u64 },

    #[error("grid of {size} points exceeds the enumeration limit of {limit} points")]
    GridTooLarge { size: u64, limit: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
