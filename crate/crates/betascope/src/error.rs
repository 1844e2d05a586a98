use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("empty comparison: neither set meets the ball")]
    EmptyComparison,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("resolution floor violated: {0}")]
    ResolutionFloor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing beta records for {n} cubes (first ids: {first:?})")]
    MissingRecords { n: usize, first: Vec<u32> },

    #[error("porosity violated at resolution: {0}")]
    PorosityViolated(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code convention: 2 usage, 3 resolution floor, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResolutionFloor(_) => 3,
            Error::InvalidParameter(_) | Error::Parse(_) | Error::DimensionMismatch(_) => 2,
            _ => 1,
        }
    }
}
