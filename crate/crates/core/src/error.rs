use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid digit set: {0}")]
    InvalidDigitSet(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("digit set has {got} elements but base is {base}")]
    WrongCardinality { base: u64, got: usize },
    #[error("digits have gcd {0}; divide them out before analysis")]
    NormalizedInputRequired(u64),
    #[error("index {index} is not in the cyclotomic tree of base {base}")]
    NotInTree { index: u64, base: u64 },
    #[error("invalid blocking: {0}")]
    InvalidBlocking(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("sums collide: {0}")]
    NotDirectSum(String),
    #[error("stage {stage}: representative {to} is not congruent to {from} modulo {modulus}")]
    InvalidRepresentative { stage: usize, from: u64, to: u64, modulus: u64 },
    #[error("stage {stage}: {msg}")]
    StageCollision { stage: usize, msg: String },
    #[error("invalid regrouping: {0}")]
    InvalidRegrouping(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
