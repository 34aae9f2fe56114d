use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not hyperhermitian: entry ({row},{col}) deviates by {deviation:e}")]
    NotHyperhermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("eigenvalue pairing failed: pair {pair} has relative gap {gap:e}")]
    EigenPairing { pair: usize, gap: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("frame index {index} out of range for {len} real coordinates")]
    FrameIndex { index: usize, len: usize },

    #[error("non-finite sample of the field at {at:?}")]
    NonFinite { at: Vec<f64> },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("density {density:e} at node {node} is below the subharmonic tolerance {tol:e}")]
    NotSubharmonic { node: usize, density: f64, tol: f64 },

    #[error("{solver} did not converge in {iterations} sweeps (last change {change:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        change: f64,
    },

    #[error("mask touches the boundary at node {node}")]
    MaskTouchesBoundary { node: usize },

    #[error("boundary data violates the precondition at {at}: {what}")]
    Boundary { at: usize, what: String },

    #[error("sequence is not monotone at step {step}, node {node}")]
    NotMonotone { step: usize, node: usize },

    #[error("weight evaluation overflowed at t = {t:e}")]
    WeightOverflow { t: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("measure is too concentrated for the grid: density {density:e} exceeds {limit:e} at node {node}")]
    OutOfModel { node: usize, density: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io: {0}")]
    Io(String),

    #[error("bad grid file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
