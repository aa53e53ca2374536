use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block length {0} is not a power of two >= 2")]
    BlockLength(usize),
    #[error("message length k={k} out of range for n={n}")]
    MessageLength { n: usize, k: usize },
    #[error("invalid information set: {0}")]
    InfoSet(String),
    #[error("PAC kernel must be nonempty with a leading 1")]
    Kernel,
    #[error("CRC degree {degree} leaves no payload bits for k={k}")]
    CrcDegree { degree: usize, k: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("code family mismatch: {0}")]
    Family(String),
    #[error("channel configuration: {0}")]
    Channel(String),
    #[error("list size must be at least 1")]
    ListSize,
    #[error("exhaustive search over 2^{0} messages refused (limit 2^20)")]
    TooManyMessages(usize),
    #[error("index set: {0}")]
    IndexSet(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("target BER {0} is not bracketed by the sweep")]
    NotBracketed(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
