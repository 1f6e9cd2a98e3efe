use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("snr must be non-negative and finite, got {0}")]
    InvalidSnr(f64),

    #[error("probability must lie strictly inside (0, 1), got {0}")]
    ProbabilityOutOfRange(f64),

    #[error("empty frame")]
    EmptyFrame,

    #[error("degenerate polygon: {0} ring vertices (need at least 3)")]
    DegeneratePolygon(usize),

    #[error("grid layouts do not match")]
    GridMismatch,

    #[error("vertex coincides with the sensor position")]
    ZeroRadial,

    #[error("timestamp {current} does not follow previous timestamp {previous}")]
    NonMonotonicTimestamp { previous: f64, current: f64 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {kind} `{name}`; valid names: {}", valid.join(", "))]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: Vec<String>,
    },

    #[error(
        "missing pose for frame at t = {0} (use doppler compensation when poses are unavailable)"
    )]
    MissingPose(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
