use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid seed: {0}")]
    InvalidSeed(&'static str),
    #[error("malformed sequence: {0}")]
    MalformedSequence(String),
    #[error("sequence of length {0} is too large for exhaustive enumeration (max {1})")]
    OracleTooLarge(usize, usize),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cannot flip {k} labels out of {n}")]
    InvalidPerturbation { k: usize, n: usize },
    #[error("invalid secret: {0}")]
    InvalidSecret(&'static str),
    #[error("salt must be {expected} bytes, got {actual}")]
    InvalidSalt { expected: usize, actual: usize },
    #[error("entropy source unavailable: {0}")]
    EntropyUnavailable(String),
    #[error("unsupported envelope format: {0}")]
    UnsupportedFormat(&'static str),
    #[error("integrity check failed")]
    IntegrityFailure,
    #[error("malformed payload: {0}")]
    MalformedPayload(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("problem size {n} below minimum {min}")]
    TooSmall { n: usize, min: usize },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("state vector for {0} qubits exceeds the {1}-qubit limit")]
    StateTooLarge(usize, usize),
    #[error("baseline unavailable: {0}")]
    BaselineUnavailable(String),
    #[error("need at least {min} samples, got {actual}")]
    InsufficientSamples { min: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
