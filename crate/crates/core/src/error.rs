use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular (pivot {pivot} at index {index})")]
    SingularMatrix { index: usize, pivot: f64 },
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not positive semidefinite (pivot {pivot} at index {index})")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("channel count mismatch: expected {expected}, got {got}")]
    ChannelCountMismatch { expected: usize, got: usize },
    #[error("bin count mismatch: expected {expected}, got {got}")]
    BinCountMismatch { expected: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("frequency bin {bin} outside the one-sided spectrum of {bins} bins")]
    InvalidBin { bin: usize, bins: usize },
    #[error("infeasible scene: {0}")]
    InfeasibleSpec(String),

    #[error("empty estimation interval")]
    EmptyInterval,
    #[error("interval [{start}, {end}) outside available frames 0..{available}")]
    IntervalOutOfRange {
        start: usize,
        end: usize,
        available: usize,
    },
    #[error("reference entry {index} is near zero; RTF undefined")]
    ReferenceEntryNearZero { index: usize },
    #[error("no source detected (principal generalized eigenvalue {0})")]
    NoSourceDetected(f64),

    #[error("denominator a^H R^-1 a = {0} too small")]
    ZeroDenominator(f64),
    #[error("constraint matrix is rank deficient (singular value ratio {0:e})")]
    RankDeficientConstraints(f64),
    #[error("too many constraints: {constraints} for {dimension} degrees of freedom")]
    TooManyConstraints {
        constraints: usize,
        dimension: usize,
    },
    #[error("left/right interferer responses differ by {0:e}")]
    ConsistencyViolation(f64),
    #[error("invalid thresholds: min {min}, max {max}")]
    InvalidThresholds { min: f64, max: f64 },
    #[error("cue undefined at every evaluated bin")]
    AllBinsSkipped,

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("wav error: {0}")]
    Wav(String),
    #[error("json error: {0}")]
    Json(String),
    #[error("csv error: {0}")]
    Csv(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        Error::Wav(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
