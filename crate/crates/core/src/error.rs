use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged {
        what: &'static str,
        iterations: usize,
    },

    #[error("step size {lambda} outside (0, {bound}) with L = {lipschitz}")]
    InvalidStep {
        lambda: f64,
        lipschitz: f64,
        bound: f64,
    },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("scalar prox solve failed at coordinate {coordinate}: input {input}")]
    ScalarSolve { coordinate: usize, input: f64 },

    #[error("operation requires psi = 0 on every coordinate")]
    NonZeroPenalty,

    #[error("custom penalty without differentiability attestation")]
    UndecidableQualification,

    #[error(
        "trace was recorded every {record_every} iterations; per-iteration records are required"
    )]
    SparseTrace { record_every: usize },

    #[error("trace has no stored iterates")]
    MissingIterates,

    #[error("polish failed: best fixed-point residual {best_residual:e} above tolerance {tol:e}")]
    PolishFailed { best_residual: f64, tol: f64 },

    #[error("minimizer is not unique: pairwise spread {spread:e}")]
    NonUniqueMinimizer { spread: f64 },

    #[error("sampling region nearly empty: accepted {accepted} of {attempts} draws")]
    EmptyRegion { accepted: usize, attempts: usize },

    #[error("rate fit window is empty")]
    EmptyWindow,

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
