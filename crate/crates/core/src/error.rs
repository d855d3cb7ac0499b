use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point with Im z = {im} is not in the upper half-plane")]
    Domain { im: f64 },

    #[error("truncation {available} is insufficient at Im z = {im:.3e}: {required} terms required")]
    TruncationInsufficient { required: u64, available: u64, im: f64 },

    #[error("record {id}: no eigenvalue stored for prime {prime}")]
    MissingEigenvalue { id: String, prime: u64 },

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("record {id} failed validation: {summary}")]
    Validation { id: String, summary: String },

    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
