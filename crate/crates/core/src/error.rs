//! Crate-wide error type.

use thiserror::Error;

/// Residuals of the subproblem optimality system, reported both on success
/// and inside non-convergence errors.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KktResiduals {
    /// ||g + (H + xi I) s||
    pub stationarity: f64,
    /// lambda_min(H) + xi
    pub shift_margin: f64,
    /// |xi * (delta - ||s||)|
    pub complementarity: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero gradient: the gradient branch needs a descent direction")]
    DegenerateDirection,

    #[error("eigen branch requires negative curvature, got lambda = {lambda}")]
    InvalidBranch { lambda: f64 },

    #[error("trust-region radius must be positive, got {delta}")]
    InvalidRadius { delta: f64 },

    #[error(
        "subproblem root finder did not converge after {iters} iterations \
         (stationarity {:.3e}, shift margin {:.3e}, complementarity {:.3e})",
        best.stationarity, best.shift_margin, best.complementarity
    )]
    TrsNoConvergence { iters: usize, best: KktResiduals },

    #[error("model predicted no decrease (model_dec = {model_dec})")]
    DegenerateModel { model_dec: f64 },

    #[error("oracle returned a non-finite {what} at iteration {iteration}, x = {x:?}")]
    OracleFailure {
        what: &'static str,
        iteration: usize,
        x: Vec<f64>,
    },

    #[error("iterate left the region where the problem constants are valid: x = {x:?}")]
    RegionExit { x: Vec<f64> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown strategy '{0}' (available: {1})")]
    UnknownStrategy(String, String),

    #[error("unknown problem '{0}'")]
    UnknownProblem(String),

    #[error("problem '{name}' does not support dimension {dim}")]
    UnsupportedDim { name: String, dim: usize },

    #[error("invalid problem spec: {0}")]
    InvalidProblemSpec(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
