use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} modes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("transform is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("photon number {total} exceeds cap {cap}")]
    PhotonCapExceeded { total: usize, cap: usize },

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("malformed click pattern: {0}")]
    MalformedClicks(String),

    #[error("impossible outcome: {0}")]
    ImpossibleOutcome(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("malformed syndrome: {0}")]
    MalformedSyndrome(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no threshold found: {0}")]
    NoThresholdFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
