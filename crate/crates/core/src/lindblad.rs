//! Lindblad master equation with an optional relaxation-time term.
//!
//! The generator evaluates
//!
//! ```text
//! drho/dt = -i[H, rho] + sum_j (L_j rho L_j^dag - 1/2 {L_j^dag L_j, rho}) + gamma0 (rho_E - rho)
//! ```
//!
//! where the last term is present only when a relaxation term is attached.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{
    check_hermitian, gibbs_state, gibbs_weights, DensityMatrix, InverseTemperature, Operator,
    Spectrum,
};
use crate::linalg::{self, c, CMatrix, I};

/// Largest vectorized dimension `N^2` assembled as a dense superoperator.
pub const SUPEROPERATOR_MAX_DIM: usize = 1024;

/// Positivity floor for emitted trajectory states and steady states.
pub const STATE_POSITIVITY_TOL: f64 = 1e-8;

/// Below this the integrator is considered unstable.
pub const INSTABILITY_TOL: f64 = 1e-6;

/// Jump operator with any rate prefactor folded into the matrix.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    matrix: Operator,
    dagger_product: Operator,
}

impl JumpOperator {
    pub fn new(matrix: Operator) -> Self {
        let dagger_product = matrix.adjoint() * &matrix;
        Self {
            matrix,
            dagger_product,
        }
    }

    /// `sqrt(rate) * op`.
    pub fn with_rate(op: &Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) {
            return Err(Error::InvalidParameter {
                what: "rate",
                reason: format!("must be >= 0, got {rate}"),
            });
        }
        Ok(Self::new(op.scale(rate.sqrt())))
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    /// `L^dagger L`.
    pub fn dagger_product(&self) -> &Operator {
        &self.dagger_product
    }

    fn dissipate_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let l = &self.matrix;
        *out += l * rho * l.adjoint();
        *out -= (&self.dagger_product * rho + rho * &self.dagger_product).scale(0.5);
    }
}

/// The compact relaxation term `gamma0 (rho_E(beta) - rho)`.
#[derive(Debug, Clone)]
pub struct RelaxationTerm {
    beta: InverseTemperature,
    gamma0: f64,
    spectrum: Spectrum,
    equilibrium: DensityMatrix,
}

impl RelaxationTerm {
    pub fn new(spectrum: Spectrum, beta: InverseTemperature, gamma0: f64) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter {
                what: "gamma0",
                reason: format!("must be positive, got {gamma0}"),
            });
        }
        let equilibrium = gibbs_state(&spectrum, beta);
        Ok(Self {
            beta,
            gamma0,
            spectrum,
            equilibrium,
        })
    }

    pub fn beta(&self) -> InverseTemperature {
        self.beta
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn equilibrium(&self) -> &DensityMatrix {
        &self.equilibrium
    }
}

#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    hamiltonian: Operator,
    jumps: Vec<JumpOperator>,
    rta: Option<RelaxationTerm>,
}

impl LindbladGenerator {
    pub fn new(hamiltonian: Operator) -> Result<Self> {
        if hamiltonian.nrows() != hamiltonian.ncols() || hamiltonian.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.nrows(),
                found: hamiltonian.ncols(),
            });
        }
        check_hermitian(&hamiltonian)?;
        Ok(Self {
            hamiltonian: linalg::hermitian_part(&hamiltonian),
            jumps: Vec::new(),
            rta: None,
        })
    }

    /// Generator whose Hamiltonian is reassembled from `spectrum`, with only
    /// the relaxation term attached.
    pub fn relaxation_only(spectrum: Spectrum, beta: InverseTemperature, gamma0: f64) -> Result<Self> {
        Self::new(spectrum.hamiltonian())?.with_relaxation(spectrum, beta, gamma0)
    }

    pub fn with_jump(mut self, jump: JumpOperator) -> Result<Self> {
        self.check_dim(jump.matrix().nrows())?;
        self.check_dim(jump.matrix().ncols())?;
        self.jumps.push(jump);
        Ok(self)
    }

    pub fn with_jumps<J: IntoIterator<Item = JumpOperator>>(self, jumps: J) -> Result<Self> {
        jumps.into_iter().try_fold(self, Self::with_jump)
    }

    pub fn with_relaxation(
        mut self,
        spectrum: Spectrum,
        beta: InverseTemperature,
        gamma0: f64,
    ) -> Result<Self> {
        self.check_dim(spectrum.dim())?;
        self.rta = Some(RelaxationTerm::new(spectrum, beta, gamma0)?);
        Ok(self)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn relaxation(&self) -> Option<&RelaxationTerm> {
        self.rta.as_ref()
    }

    /// Right-hand side with the relaxation target replaced by `equilibrium`.
    fn rhs_with(&self, rho: &CMatrix, equilibrium: Option<&CMatrix>) -> CMatrix {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-I);
        for jump in &self.jumps {
            jump.dissipate_into(rho, &mut out);
        }
        if let (Some(rta), Some(target)) = (&self.rta, equilibrium) {
            out += (target - rho).scale(rta.gamma0);
        }
        out
    }

    /// Suggested fixed RK4 step: `min(0.01/gamma0, 0.01/||H||, 0.01/||sum L^dag L||)`.
    pub fn default_step(&self) -> f64 {
        let mut step = f64::INFINITY;
        if let Some(rta) = &self.rta {
            step = step.min(0.01 / rta.gamma0);
        }
        let h_norm = spectral_norm(&self.hamiltonian);
        if h_norm > 0.0 {
            step = step.min(0.01 / h_norm);
        }
        if !self.jumps.is_empty() {
            let total = self
                .jumps
                .iter()
                .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, j| acc + j.dagger_product());
            let rate = spectral_norm(&total);
            if rate > 0.0 {
                step = step.min(0.01 / rate);
            }
        }
        if step.is_finite() {
            step
        } else {
            0.01
        }
    }
}

fn spectral_norm(h: &CMatrix) -> f64 {
    linalg::hermitian_eigenvalues(h)
        .iter()
        .fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Explicit jump set `L_ij = sqrt(gamma0 w_i) |i><j|` over all pairs of
/// eigenstates, diagonal pairs included, with `w_i` the normalized Gibbs
/// weight. Summing its dissipator reproduces `gamma0 (rho_E - rho)`.
pub fn rta_jump_set(
    spec: &Spectrum,
    beta: InverseTemperature,
    gamma0: f64,
) -> Result<Vec<JumpOperator>> {
    rta_jump_set_with_dephasing(spec, beta, gamma0, 1.0)
}

/// As [`rta_jump_set`], with the diagonal operators `L_ii` scaled in rate by
/// `diagonal_multiplier` (1 reproduces the compact form exactly).
pub fn rta_jump_set_with_dephasing(
    spec: &Spectrum,
    beta: InverseTemperature,
    gamma0: f64,
    diagonal_multiplier: f64,
) -> Result<Vec<JumpOperator>> {
    if beta.is_infinite() {
        return Err(Error::InfiniteBetaJumpSet);
    }
    if !(gamma0 > 0.0) {
        return Err(Error::InvalidParameter {
            what: "gamma0",
            reason: format!("must be positive, got {gamma0}"),
        });
    }
    if !(diagonal_multiplier >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "diagonal_multiplier",
            reason: format!("must be >= 0, got {diagonal_multiplier}"),
        });
    }
    let weights = gibbs_weights(spec.energies(), beta);
    let n = spec.dim();
    let v = spec.basis();
    let mut jumps = Vec::with_capacity(n * n);
    for (i, w) in weights.iter().enumerate() {
        for j in 0..n {
            let mut rate = gamma0 * w;
            if i == j {
                rate *= diagonal_multiplier;
            }
            let ket = v.column(i);
            let bra = v.column(j).adjoint();
            jumps.push(JumpOperator::new((ket * bra).scale(rate.sqrt())));
        }
    }
    Ok(jumps)
}

/// Squared jump amplitudes `C_ij^2 = gamma0 w_i`.
pub fn rta_rates(spec: &Spectrum, beta: InverseTemperature, gamma0: f64) -> Vec<Vec<f64>> {
    let w = gibbs_weights(spec.energies(), beta);
    (0..spec.dim())
        .map(|i| vec![gamma0 * w[i]; spec.dim()])
        .collect()
}

pub fn lindblad_rhs(gen: &LindbladGenerator, rho: &DensityMatrix) -> Result<Operator> {
    gen.check_dim(rho.dim())?;
    Ok(gen.rhs_with(
        rho.matrix(),
        gen.rta.as_ref().map(|r| r.equilibrium.matrix()),
    ))
}

/// States sampled at the requested times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Fixed-step RK4 integration with a constant relaxation temperature.
pub fn evolve(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    times: &[f64],
    step: f64,
) -> Result<Trajectory> {
    let target = gen.rta.as_ref().map(|r| r.equilibrium.matrix().clone());
    integrate(gen, rho0, times, step, |_| target.clone())
}

/// RK4 integration where the relaxation target follows `beta_at(t)`.
pub fn evolve_with_schedule<F>(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    times: &[f64],
    step: f64,
    beta_at: F,
) -> Result<Trajectory>
where
    F: Fn(f64) -> InverseTemperature,
{
    let rta = gen.rta.as_ref().ok_or(Error::InvalidParameter {
        what: "generator",
        reason: "a temperature schedule requires a relaxation term".into(),
    })?;
    integrate(gen, rho0, times, step, |t| {
        Some(gibbs_state(&rta.spectrum, beta_at(t)).into_matrix())
    })
}

fn integrate<F>(
    gen: &LindbladGenerator,
    rho0: &DensityMatrix,
    times: &[f64],
    step: f64,
    target_at: F,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Option<CMatrix>,
{
    gen.check_dim(rho0.dim())?;
    if !(step > 0.0) {
        return Err(Error::InvalidParameter {
            what: "step",
            reason: format!("must be positive, got {step}"),
        });
    }
    if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter {
            what: "times",
            reason: "must be non-empty, ascending and start at 0".into(),
        });
    }

    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    let mut out_times = Vec::with_capacity(times.len());
    let mut states = Vec::with_capacity(times.len());
    for &t_out in times {
        let span = t_out - t;
        if span > 0.0 {
            let substeps = (span / step).ceil().max(1.0) as usize;
            let h = span / substeps as f64;
            for s in 0..substeps {
                let t0 = t + s as f64 * h;
                rho = rk4_step(gen, &rho, t0, h, &target_at);
            }
        }
        t = t_out;

        let drift = linalg::hermiticity_defect(&rho);
        if drift > 0.0 {
            log::debug!("t = {t_out}: re-Hermitizing, drift {drift:.3e}");
        }
        rho = linalg::hermitian_part(&rho);
        let min_eig = linalg::min_eigenvalue(&rho);
        if min_eig < -INSTABILITY_TOL {
            return Err(Error::IntegrationUnstable {
                time: t_out,
                min_eigenvalue: min_eig,
            });
        }
        if min_eig < -STATE_POSITIVITY_TOL {
            log::warn!("t = {t_out}: minimum eigenvalue {min_eig:.3e}");
        }
        out_times.push(t_out);
        states.push(DensityMatrix::from_matrix_unchecked(rho.clone()));
    }
    Ok(Trajectory {
        times: out_times,
        states,
    })
}

fn rk4_step<F>(gen: &LindbladGenerator, rho: &CMatrix, t: f64, h: f64, target_at: &F) -> CMatrix
where
    F: Fn(f64) -> Option<CMatrix>,
{
    let start = target_at(t);
    let mid = target_at(t + 0.5 * h);
    let end = target_at(t + h);
    let k1 = gen.rhs_with(rho, start.as_ref());
    let k2 = gen.rhs_with(&(rho + k1.scale(0.5 * h)), mid.as_ref());
    let k3 = gen.rhs_with(&(rho + k2.scale(0.5 * h)), mid.as_ref());
    let k4 = gen.rhs_with(&(rho + k3.scale(h)), end.as_ref());
    rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
}

/// Vectorized generator: `vec(drho/dt) = A vec(rho) + b` in column-stacking
/// convention. The relaxation term contributes `-gamma0` to the diagonal of
/// `A` and `gamma0 vec(rho_E)` to `b`.
pub fn superoperator(gen: &LindbladGenerator) -> Result<(DMatrix<Complex64>, DVector<Complex64>)> {
    let n = gen.dim();
    let big = n * n;
    if big > SUPEROPERATOR_MAX_DIM {
        return Err(Error::SizeLimit {
            dim: big,
            limit: SUPEROPERATOR_MAX_DIM,
        });
    }
    let id = linalg::identity(n);
    let h = &gen.hamiltonian;
    let mut a = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-I);
    for jump in &gen.jumps {
        let l = jump.matrix();
        let ldl = jump.dagger_product();
        a += l.conjugate().kronecker(l);
        a -= id.kronecker(ldl).scale(0.5);
        a -= ldl.transpose().kronecker(&id).scale(0.5);
    }
    let mut b = DVector::zeros(big);
    if let Some(rta) = &gen.rta {
        for d in 0..big {
            a[(d, d)] -= c(rta.gamma0);
        }
        b = linalg::vectorize(rta.equilibrium.matrix()).scale(rta.gamma0);
    }
    Ok((a, b))
}

/// Relative singular-value cutoff used for rank decisions.
const RANK_TOL: f64 = 1e-10;

/// Unique stationary state, solving `A vec(rho) + b = 0` together with
/// `Tr(rho) = 1` in the least-squares sense.
pub fn steady_state(gen: &LindbladGenerator) -> Result<DensityMatrix> {
    let n = gen.dim();
    let big = n * n;
    let (a, b) = superoperator(gen)?;

    let mut stacked = DMatrix::<Complex64>::zeros(big + 1, big);
    stacked.rows_mut(0, big).copy_from(&a);
    for i in 0..n {
        stacked[(big, i * n + i)] = c(1.0);
    }
    let mut rhs = DVector::<Complex64>::zeros(big + 1);
    rhs.rows_mut(0, big).copy_from(&(-&b));
    rhs[big] = c(1.0);

    let sigma = stacked.singular_values();
    let sigma_max = sigma.max();
    let deficient = sigma.iter().filter(|&&s| s <= RANK_TOL * sigma_max).count();
    if deficient > 0 {
        let a_sigma = a.singular_values();
        let a_max = a_sigma.max();
        let null_dim = a_sigma.iter().filter(|&&s| s <= RANK_TOL * a_max).count();
        return Err(Error::NonUniqueSteadyState { null_dim });
    }
    // Householder least squares, then one step of iterative refinement.
    let qr = stacked.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let solve = |rhs: &DVector<Complex64>| {
        r.solve_upper_triangular(&(q.adjoint() * rhs))
            .ok_or_else(|| Error::SteadyState("singular triangular factor".into()))
    };
    let mut x = solve(&rhs)?;
    let correction = solve(&(&rhs - &stacked * &x))?;
    x += correction;

    let residual = (&a * &x + &b).norm();
    if !(residual < 1e-9) {
        return Err(Error::SteadyState(format!("residual {residual:.3e}")));
    }
    let rho = linalg::hermitian_part(&linalg::unvectorize(&x, n));
    DensityMatrix::with_positivity_tolerance(rho, STATE_POSITIVITY_TOL)
}
