use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),

    #[error("n1 mismatch: {0} vs {1}")]
    N1Mismatch(usize, usize),

    #[error("contraction rank {inner} exceeds tensor rank {outer}")]
    ContractionRank { outer: usize, inner: usize },

    #[error("truncation too short: need degree block {needed}, have up to {available} ({what})")]
    Truncation {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("zero constant term")]
    ZeroConstantTerm,

    #[error("chi coefficient at degree {0} is zero")]
    ZeroChiCoefficient(usize),

    #[error("basis tag mismatch: expected {expected}, found {found}")]
    BasisMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("chi functions of the two systems differ")]
    ChiMismatch,

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("accuracy envelope exceeded: |u| = {radius}, tail bound {tail:e} > {tol:e}")]
    Envelope { radius: f64, tail: f64, tol: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
