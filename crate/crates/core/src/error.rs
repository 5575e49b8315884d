/// Crate-wide error type. Variants map onto the CLI exit codes: config
/// problems exit 2, missing artifacts exit 3, resource exhaustion exits 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration rejected: {0}")]
    Calibration(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("statistic undefined: {0}")]
    UndefinedStatistic(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("malformed artifact: {0}")]
    Format(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
