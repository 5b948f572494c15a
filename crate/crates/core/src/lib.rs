//! Dense simulation toolkit for Lindblad dynamics in the relaxation-time
//! approximation: thermal jump operators, master-equation integration and
//! steady states, closed-form environment-temperature quenches, power-law
//! scaling fits, first-order perturbation theory for conserved quantities,
//! and a config-driven batch runner.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod fermi_gas;
pub mod fermion;
pub mod hilbert;
pub mod linalg;
pub mod lindblad;
pub mod perturbation;
pub mod quadrature;
pub mod quench;
pub mod random;
pub mod runner;
pub mod scaling;
pub mod validation;

pub use error::{Error, Result};
pub use hilbert::{
    eig_hermitian, expectation, gibbs_state, DensityMatrix, InverseTemperature, Operator, Spectrum,
};
