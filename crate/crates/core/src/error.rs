use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("invalid problem data: {0}")]
    InvalidData(String),

    #[error("infeasible dual point")]
    InfeasibleDual,

    #[error("no feasible scaling: weights vanish while dual scores do not")]
    NoFeasibleScaling,

    #[error("duality violation: gap {0:e} is negative beyond numerical slack")]
    DualityViolation(f64),

    #[error("degenerate design: zero spectral norm")]
    DegenerateDesign,

    #[error("step size too large: iterate diverged at iteration {0}")]
    Diverged(usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("no samples in {0}")]
    NoSamples(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
