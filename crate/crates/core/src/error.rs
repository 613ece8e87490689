use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("G is multivalued at y = 0 for p = {p} < 1")]
    MultivaluedPoint { p: f64 },

    #[error("finite basis injectivity fails on index set {indices:?}")]
    FbiViolation { indices: Vec<usize> },

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("u_plus has empty support")]
    EmptySupport,

    #[error("iteration diverged: {0}")]
    Divergence(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("net too coarse: {0}")]
    NetTooCoarse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
