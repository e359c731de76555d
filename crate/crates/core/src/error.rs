use thiserror::Error;

/// Errors raised by the model, solvers and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("{quantity} is undefined for negative frequency {omega}")]
    NegativeFrequency { quantity: &'static str, omega: f64 },

    #[error("grid resolution: {0}")]
    GridResolution(String),

    #[error("quadrature resolution: {0}")]
    QuadratureResolution(String),

    #[error("S_z^0 is undefined when W21 + W12 = 0")]
    UndefinedEquilibrium,

    #[error("memory kernel not converged at cutoff: |K(t_mem)| / max|K| = {ratio:.3e}")]
    KernelCutoff { ratio: f64 },

    #[error("propagation unstable at t = {t}: rho11 = {rho11}")]
    Unstable { t: f64, rho11: f64 },

    #[error("Hartree-Fock loop did not converge at step {step}: residual {residual:.3e} after {iterations} iterations")]
    SelfConsistency { step: usize, residual: f64, iterations: usize },

    #[error("ill-conditioned basis: singular-value cutoff removed every basis vector")]
    IllConditionedBasis,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
