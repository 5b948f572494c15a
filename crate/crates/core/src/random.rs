//! Seeded random operators and states for validation runs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::DensityMatrix;
use crate::linalg::{self, CMatrix};

pub type ValidationRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ValidationRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_entry<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_entry(rng));
    linalg::hermitian_part(&g)
}

/// Full-rank mixed state `G G^dagger / Tr(G G^dagger)`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> DensityMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| complex_entry(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(&m.unscale(tr)))
}

/// Random Hermitian operator diagonal in the eigenbasis of `spec`.
pub fn random_diagonal_in<R: Rng>(rng: &mut R, spec: &crate::hilbert::Spectrum) -> CMatrix {
    let values: Vec<f64> = (0..spec.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    spec.compose(&values)
}
