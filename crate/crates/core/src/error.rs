use thiserror::Error;

/// Errors raised by model construction, topology analysis, theory evaluation
/// and the Monte Carlo harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("combination matrix is not primitive; Perron vector is ambiguous")]
    SpectralAmbiguity,

    #[error("weights violate the graph support at ({row}, {col})")]
    SupportViolation { row: usize, col: usize },

    #[error("infeasible graph request: {0}")]
    InfeasibleGraph(String),

    #[error("unstable configuration: {0}")]
    Unstable(String),

    #[error("theory unavailable: {0}")]
    TheoryUnavailable(String),

    #[error("estimate diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{diverged} of {trials} trials diverged")]
    EnsembleDiverged { diverged: usize, trials: usize },

    #[error("no measurable transient: {0}")]
    NoTransient(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
