use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at row {row}: {msg}")]
    Malformed { row: usize, msg: String },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
