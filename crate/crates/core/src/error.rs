use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian: ||A - A^dagger||_F = {norm:.3e}")]
    NotHermitian { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter {what}: {reason}")]
    InvalidParameter { what: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("the explicit jump set is undefined at zero temperature; use the compact relaxation term instead")]
    InfiniteBetaJumpSet,

    #[error("integration unstable at t = {time}: minimum eigenvalue {min_eigenvalue:.3e}; reduce the step size")]
    IntegrationUnstable { time: f64, min_eigenvalue: f64 },

    #[error("dense size limit exceeded: dimension {dim} > {limit}")]
    SizeLimit { dim: usize, limit: usize },

    #[error("steady state is not unique: null-space dimension {null_dim}")]
    NonUniqueSteadyState { null_dim: usize },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error:.3e} after {panels} panels")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        panels: usize,
    },

    #[error("observable does not commute with the Hamiltonian: relative commutator norm {norm:.3e}")]
    NotConserved { norm: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("at tau = {tau}: {source}")]
    AtTau { tau: f64, source: Box<Error> },
}
