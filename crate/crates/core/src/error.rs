use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid database: {0}")]
    InvalidDatabase(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible determinacy certificate")]
    InfeasibleCertificate,

    #[error("purchase refused: {0}")]
    Refused(String),

    #[error("ledger integrity error at entry {seq}: {reason}")]
    Integrity { seq: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(expected: usize, found: usize) -> Self {
        Error::DimensionMismatch { expected, found }
    }
}
