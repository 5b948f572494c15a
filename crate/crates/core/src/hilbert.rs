//! Dense Hilbert-space primitives: Hermitian spectra, Gibbs states and
//! expectation values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// A dense `N x N` complex operator.
pub type Operator = CMatrix;

/// Tolerance on `||H - H^dagger||_F` (relative to `max(1, ||H||_F)`) accepted
/// as Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Ground-space grouping width for the zero-temperature state, relative to
/// the spectral width.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Inverse temperature `beta >= 0`. `+inf` is the zero-temperature sentinel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub const INFINITE: Self = Self(f64::INFINITY);
    pub const ZERO: Self = Self(0.0);

    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter {
                what: "beta",
                reason: format!("must be >= 0, got {beta}"),
            });
        }
        Ok(Self(beta))
    }

    /// `T = 0` maps to the infinite sentinel, `T = inf` to `beta = 0`.
    pub fn from_temperature(temperature: f64) -> Result<Self> {
        if temperature.is_nan() || temperature < 0.0 {
            return Err(Error::InvalidParameter {
                what: "temperature",
                reason: format!("must be >= 0, got {temperature}"),
            });
        }
        if temperature == 0.0 {
            Ok(Self::INFINITE)
        } else {
            Ok(Self(1.0 / temperature))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn temperature(self) -> f64 {
        if self.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

/// Eigen-decomposition of a Hermitian operator with ascending energies.
#[derive(Debug, Clone)]
pub struct Spectrum {
    energies: Vec<f64>,
    basis: CMatrix,
}

impl Spectrum {
    /// Builds a spectrum from already-known energies and eigenvectors
    /// (columns of `basis`). Energies are sorted, columns permuted along.
    pub fn from_parts(energies: Vec<f64>, basis: CMatrix) -> Result<Self> {
        let n = energies.len();
        if n == 0 || basis.nrows() != n || basis.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: basis.nrows(),
            });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted = order.iter().map(|&i| energies[i]).collect();
        let basis = CMatrix::from_fn(n, n, |r, col| basis[(r, order[col])]);
        Ok(Self {
            energies: sorted,
            basis,
        })
    }

    /// Spectrum of an operator that is diagonal in the computational basis.
    pub fn from_diagonal(energies: &[f64]) -> Result<Self> {
        Self::from_parts(energies.to_vec(), linalg::identity(energies.len()))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the eigenvectors, in the order of [`Spectrum::energies`].
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn width(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// `V diag(values) V^dagger`.
    pub fn compose(&self, values: &[f64]) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.basis.clone();
        for (j, &w) in values.iter().enumerate().take(n) {
            scaled.column_mut(j).scale_mut(w);
        }
        scaled * self.basis.adjoint()
    }

    /// Reassembles the Hamiltonian `V diag(E) V^dagger`.
    pub fn hamiltonian(&self) -> CMatrix {
        self.compose(&self.energies)
    }

    /// Rotates an operator into the eigenbasis: `V^dagger A V`.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.basis.adjoint() * op * &self.basis
    }
}

/// Diagonalizes a Hermitian operator.
pub fn eig_hermitian(h: &Operator) -> Result<Spectrum> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    if h.nrows() == 0 {
        return Err(Error::InvalidParameter {
            what: "dim",
            reason: "operator must have dimension >= 1".into(),
        });
    }
    check_hermitian(h)?;
    let eig = SymmetricEigen::new(linalg::hermitian_part(h));
    Spectrum::from_parts(eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn check_hermitian(h: &Operator) -> Result<()> {
    let defect = linalg::hermiticity_defect(h);
    if defect > HERMITIAN_TOL * linalg::frobenius(h).max(1.0) {
        return Err(Error::NotHermitian { norm: defect });
    }
    Ok(())
}

/// Normalized Boltzmann weights of `energies` at `beta`.
///
/// Weights are computed relative to the minimum energy so the partition
/// function never over- or underflows. At `beta = inf` the weight is spread
/// evenly over the ground space.
pub fn gibbs_weights(energies: &[f64], beta: InverseTemperature) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let e_max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = if beta.is_infinite() {
        let tol = DEGENERACY_TOL * (e_max - e_min);
        energies
            .iter()
            .map(|&e| if e - e_min <= tol { 1.0 } else { 0.0 })
            .collect()
    } else {
        energies
            .iter()
            .map(|&e| (-beta.value() * (e - e_min)).exp())
            .collect()
    };
    let norm: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / norm).collect()
}

/// Hermitian, unit-trace, positive-semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-12;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_positivity_tolerance(m, Self::POSITIVITY_TOL)
    }

    /// Validates with a custom lower bound `-tol` on the smallest eigenvalue.
    pub fn with_positivity_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidDensity(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = linalg::hermiticity_defect(&m);
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity defect {defect:.3e}"
            )));
        }
        let tr = m.trace();
        if (tr - c(1.0)).norm() > Self::TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let lambda = linalg::min_eigenvalue(&m);
        if lambda < -tol {
            return Err(Error::InvalidDensity(format!(
                "minimum eigenvalue {lambda:.3e}"
            )));
        }
        Ok(Self(m))
    }

    /// Skips validation. Callers guarantee the invariants by construction.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(linalg::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDensity("zero state vector".into()));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.0, &self.0).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.0)
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        linalg::trace_distance(&self.0, &other.0)
    }
}

/// Thermal state `exp(-beta H)/Z` in the basis of the source operator.
pub fn gibbs_state(spec: &Spectrum, beta: InverseTemperature) -> DensityMatrix {
    let weights = gibbs_weights(spec.energies(), beta);
    DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&spec.compose(&weights)))
}

/// `Tr(rho O)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<Complex64> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: op.nrows(),
        });
    }
    Ok(linalg::trace_product(rho.matrix(), op))
}

/// Builds a Hermitian operator from a real symmetric matrix given row-major.
pub fn real_operator(n: usize, rows: &[f64]) -> Operator {
    DMatrix::from_row_slice(n, n, rows).map(c)
}
