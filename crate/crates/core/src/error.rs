use thiserror::Error;

/// Errors produced by the solver, the oracle and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: rates must be strictly positive and finite")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unstable parameters: rho = {rho} >= 1, no stationary distribution exists")]
    Unstable { rho: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(
        "series did not converge within {terms} terms: tail bound {achieved:e} above tolerance {tol:e}"
    )]
    Truncation {
        terms: usize,
        achieved: f64,
        tol: f64,
    },

    #[error("normalization constant must be positive, got {0}")]
    Normalization(f64),

    #[error("evaluation produced {value:e}, below the -1e-12 truncation floor")]
    TruncationTooCoarse { value: f64 },

    #[error("field not evaluable on the requested box: {0}")]
    Evaluation(String),

    #[error("stationary solve residual {residual:e} exceeds the {gate:e} gate")]
    SolverResidual { residual: f64, gate: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("simulation error: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
