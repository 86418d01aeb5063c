use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("site index {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },

    #[error(
        "{n} qubits require 2^{n} amplitudes ({gib:.1} GiB); limit is {limit} qubits \
         (set OTOC_MAX_QUBITS or pass --max-qubits to override)"
    )]
    QubitGuard { n: usize, limit: usize, gib: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("undefined correlation: input has zero variance")]
    ZeroVariance,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
