use thiserror::Error;

/// Errors raised by the spectral laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{model} has no regularly varying tail")]
    UnsupportedVariant { model: &'static str },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("coefficient support is empty")]
    EmptySupport,

    #[error("sequence has no nonzero entry")]
    ZeroSequence,

    #[error("panel of {cells} cells exceeds the memory cap of {cap}")]
    MemoryBudget { cells: usize, cap: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("Painleve integration blew up at x = {x}")]
    BlowUp { x: f64 },

    #[error("{what} = {value} is outside the admissible range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("{failed} of {total} replicates failed (first: {first})")]
    EnsembleFailed {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
