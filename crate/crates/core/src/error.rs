use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("family constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("closed-form tau {closed} disagrees with numeric root {numeric}")]
    RootMismatch { closed: f64, numeric: f64 },

    #[error("index {index} out of range 2..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("exact arithmetic unavailable: {0}")]
    NotExact(String),

    #[error("exact cutoff {requested} exceeds the configured bound {limit}")]
    OverflowPolicy { requested: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("limit recurrence undefined: {0}")]
    DomainError(String),

    #[error("integral diverges for indices ({s1}, {s2}, {s3})")]
    NonIntegrable { s1: u32, s2: u32, s3: u32 },

    #[error("regime requires a fitted shift coefficient: {0}")]
    MissingShift(String),

    #[error("least-squares design is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
}
