use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid degree distribution: {0}")]
    DegreeDistribution(String),

    #[error("base matrix row {0} is all zero")]
    ZeroRow(usize),

    #[error("base matrix column {0} is all zero")]
    ZeroColumn(usize),

    #[error("design rate {num}/{den} is outside (0, 1)")]
    RateOutOfRange { num: i64, den: i64 },

    #[error("invalid base matrix: {0}")]
    BaseMatrix(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("weight schedule has {rows} rows but {needed} iterations were requested")]
    ScheduleTooShort { rows: usize, needed: usize },

    #[error("weight schedule does not match the code: {0}")]
    ScheduleMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no converging point found up to {0} dB")]
    NoThreshold(f64),

    #[error(
        "convergence is not monotone in Eb/N0: converged at {converged} dB but not at {failed} dB"
    )]
    NonMonotone { converged: f64, failed: f64 },

    #[error("inner optimisation did not converge: {0}")]
    Optimisation(String),

    #[error("lifting conflict: {0}")]
    Lifting(String),

    #[error("no feasible candidate found")]
    NoFeasibleCandidate,

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
