use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh level {level} is too large for the index type")]
    MeshSize { level: u32 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not positive definite (pivot {pivot:e} at row {row}); reaction coefficient violates coercivity")]
    Coercivity { row: usize, pivot: f64 },

    #[error("linear solve did not reach tolerance {tol:e}; residual history {history:?}")]
    LinearSolve { tol: f64, history: Vec<f64> },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("optimal control solver stopped after {iterations} outer iterations with KKT residual {kkt:e}")]
    OcpNonConvergence { iterations: usize, kkt: f64, best: Box<crate::optimizer::OcpSolution> },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("inadmissible data: {0}")]
    Inadmissible(String),

    #[error("fields live on different meshes and no prolongation map was supplied")]
    MeshMismatch,
}
