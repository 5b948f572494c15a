//! First-order steady-state shifts of conserved quantities under weak extra
//! dissipation on top of thermal relaxation.
//!
//! For an operator `O` commuting with `H`, the stationary shift caused by jump
//! operators `L_i` with small rates `eps_i` is
//! `sum_i (eps_i/gamma) <L_i^dag O L_i - (O L_i^dag L_i + L_i^dag L_i O)/2>_0`,
//! with `<.>_0` taken in the unperturbed Gibbs state.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion;
use crate::hilbert::{check_hermitian, gibbs_state, DensityMatrix, InverseTemperature, Operator, Spectrum};
use crate::linalg::{self, commutator, frobenius, CMatrix};
use crate::lindblad::{steady_state, JumpOperator, LindbladGenerator};

/// Commutator norm above which an operator is not treated as conserved.
pub const CONSERVATION_TOL: f64 = 1e-10;
/// Ratio `eps/gamma0` above which a regime warning is logged.
pub const WEAK_COUPLING_WARN: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct PerturbationSetup {
    pub spectrum: Spectrum,
    pub beta: InverseTemperature,
    pub gamma0: f64,
    /// Unscaled jump operators with their rates.
    pub perturbing_jumps: Vec<(Operator, f64)>,
}

impl PerturbationSetup {
    pub fn new(
        spectrum: Spectrum,
        beta: InverseTemperature,
        gamma0: f64,
        perturbing_jumps: Vec<(Operator, f64)>,
    ) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter {
                what: "gamma0",
                reason: format!("must be positive and finite, got {gamma0}"),
            });
        }
        let n = spectrum.dim();
        for (op, eps) in &perturbing_jumps {
            if op.nrows() != n || op.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: op.nrows(),
                });
            }
            if !(*eps >= 0.0) || !eps.is_finite() {
                return Err(Error::InvalidParameter {
                    what: "epsilon",
                    reason: format!("must be non-negative and finite, got {eps}"),
                });
            }
            if eps / gamma0 > WEAK_COUPLING_WARN {
                warn!("eps/gamma0 = {:.3e} exceeds {WEAK_COUPLING_WARN}; first-order result may be inaccurate", eps / gamma0);
            }
        }
        Ok(Self {
            spectrum,
            beta,
            gamma0,
            perturbing_jumps,
        })
    }

    /// Generator with relaxation plus the perturbing jumps at their rates.
    pub fn generator(&self) -> Result<LindbladGenerator> {
        let jumps = self
            .perturbing_jumps
            .iter()
            .map(|(op, eps)| JumpOperator::with_rate(op, *eps))
            .collect::<Result<Vec<_>>>()?;
        LindbladGenerator::relaxation_only(self.spectrum.clone(), self.beta, self.gamma0)?.with_jumps(jumps)
    }
}

/// `||[O, H]||_F / (||O||_F ||H||_F)`, zero when either norm vanishes.
pub fn check_conserved(o: &Operator, h: &Operator) -> Result<f64> {
    if o.shape() != h.shape() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: o.nrows(),
        });
    }
    let denom = frobenius(o) * frobenius(h);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(frobenius(&commutator(o, h)) / denom)
}

/// First-order shift of `<O>` in the perturbed steady state.
pub fn delta_expectation(o: &Operator, setup: &PerturbationSetup) -> Result<f64> {
    let h = setup.spectrum.hamiltonian();
    let norm = check_conserved(o, &h)?;
    if norm > CONSERVATION_TOL {
        return Err(Error::NotConserved { norm });
    }
    let rho0 = gibbs_state(&setup.spectrum, setup.beta);
    let rho = rho0.matrix();
    let mut total = 0.0;
    for (l, eps) in &setup.perturbing_jumps {
        if *eps == 0.0 {
            continue;
        }
        let ld = l.adjoint();
        let ldl = &ld * l;
        let term: CMatrix = &ld * o * l - (o * &ldl + &ldl * o).scale(0.5);
        total += eps / setup.gamma0 * linalg::trace_product(&term, rho).re;
    }
    Ok(total)
}

/// Exact stationary shift `<O>_ss - <O>_0` from the full superoperator solve.
pub fn exact_shift(o: &Operator, setup: &PerturbationSetup) -> Result<f64> {
    let rho_ss = steady_state(&setup.generator()?)?;
    let rho0 = gibbs_state(&setup.spectrum, setup.beta);
    Ok(linalg::trace_product(o, rho_ss.matrix()).re - linalg::trace_product(o, rho0.matrix()).re)
}

/// `Tr(O [H, rho])`, which vanishes for conserved `O`.
pub fn commutator_term(o: &Operator, h: &Operator, rho: &DensityMatrix) -> Complex64 {
    linalg::trace_product(o, &commutator(h, rho.matrix()))
}

/// A chain site coupled to particle-removing and particle-injecting
/// zero-temperature reservoirs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalReservoirPair {
    pub site: usize,
    pub eps_an: f64,
    pub eps_cr: f64,
    pub length: usize,
    pub t_hop: f64,
}

impl LocalReservoirPair {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.length > fermion::MAX_CHAIN_LENGTH {
            return Err(Error::OutOfRange {
                what: "chain length",
                value: self.length as f64,
                min: 1.0,
                max: fermion::MAX_CHAIN_LENGTH as f64,
            });
        }
        if self.site == 0 || self.site > self.length {
            return Err(Error::OutOfRange {
                what: "site",
                value: self.site as f64,
                min: 1.0,
                max: self.length as f64,
            });
        }
        for (what, v) in [("eps_an", self.eps_an), ("eps_cr", self.eps_cr)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    what,
                    reason: format!("must be non-negative and finite, got {v}"),
                });
            }
        }
        if !self.t_hop.is_finite() {
            return Err(Error::InvalidParameter {
                what: "t_hop",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<Operator> {
        self.validate()?;
        fermion::build_fermion_chain(self.length, self.t_hop)
    }

    /// Perturbation setup for the chain at `beta`, `gamma0`.
    pub fn setup(&self, beta: InverseTemperature, gamma0: f64) -> Result<PerturbationSetup> {
        let h = self.hamiltonian()?;
        check_hermitian(&h)?;
        let spectrum = crate::hilbert::eig_hermitian(&h)?;
        PerturbationSetup::new(spectrum, beta, gamma0, local_reservoir_jumps(self)?)
    }
}

/// `[(c_l n_l, eps_an), (c_l^dag (1 - n_l), eps_cr)]` as literal products.
pub fn local_reservoir_jumps(cfg: &LocalReservoirPair) -> Result<Vec<(Operator, f64)>> {
    cfg.validate()?;
    let (len, l) = (cfg.length, cfg.site);
    let c = fermion::annihilation(len, l)?;
    let cd = fermion::creation(len, l)?;
    let n = fermion::site_number(len, l)?;
    let one_minus_n = linalg::identity(1 << len) - &n;
    Ok(vec![(&c * &n, cfg.eps_an), (&cd * &one_minus_n, cfg.eps_cr)])
}

/// Closed form of the mode-occupation shift,
/// `(1/gamma0)(2/(L+1)) sin^2(pi k l/(L+1)) [eps_cr (1 - n_k) - eps_an n_k]`.
pub fn delta_nk_closed_form(
    cfg: &LocalReservoirPair,
    k: usize,
    beta: InverseTemperature,
    gamma0: f64,
) -> Result<f64> {
    cfg.validate()?;
    if k == 0 || k > cfg.length {
        return Err(Error::OutOfRange {
            what: "mode k",
            value: k as f64,
            min: 1.0,
            max: cfg.length as f64,
        });
    }
    let eps_k = fermion::single_particle_energies(cfg.length, cfg.t_hop)[k - 1];
    let nk = fermion::fermi_function(eps_k, beta.value());
    let amp = fermion::mode_amplitudes(cfg.length, k)?[cfg.site - 1];
    Ok(amp * amp / gamma0 * (cfg.eps_cr * (1.0 - nk) - cfg.eps_an * nk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{annihilation, creation, fermion_mode_number};

    fn pair(length: usize, site: usize, eps_an: f64, eps_cr: f64) -> LocalReservoirPair {
        LocalReservoirPair {
            site,
            eps_an,
            eps_cr,
            length,
            t_hop: 1.0,
        }
    }

    fn beta(b: f64) -> InverseTemperature {
        InverseTemperature::new(b).unwrap()
    }

    #[test]
    fn literal_products_simplify() {
        let cfg = pair(3, 2, 0.1, 0.2);
        let jumps = local_reservoir_jumps(&cfg).unwrap();
        assert!(linalg::max_abs_diff(&jumps[0].0, &annihilation(3, 2).unwrap()) < 1e-15);
        assert!(linalg::max_abs_diff(&jumps[1].0, &creation(3, 2).unwrap()) < 1e-15);
        assert_eq!(jumps[0].1, 0.1);
        assert_eq!(jumps[1].1, 0.2);
    }

    #[test]
    fn two_site_jump_matrices() {
        // basis |n2 n1>: 0 = empty, 1 = site 1, 2 = site 2, 3 = both
        let jumps = local_reservoir_jumps(&pair(2, 1, 1.0, 1.0)).unwrap();
        let mut an = CMatrix::zeros(4, 4);
        an[(0, 1)] = linalg::c(1.0);
        an[(2, 3)] = linalg::c(1.0);
        assert!(linalg::max_abs_diff(&jumps[0].0, &an) < 1e-15);
        assert!(linalg::max_abs_diff(&jumps[1].0, &an.adjoint()) < 1e-15);
    }

    #[test]
    fn conservation_check() {
        let h = fermion::build_fermion_chain(2, 1.0).unwrap();
        assert_eq!(check_conserved(&h, &h).unwrap(), 0.0);
        assert!(check_conserved(&fermion_mode_number(2, 1).unwrap(), &h).unwrap() < 1e-12);
        let x = annihilation(2, 1).unwrap() + creation(2, 1).unwrap();
        assert!(check_conserved(&x, &h).unwrap() > 0.1);
        assert!(matches!(
            check_conserved(&x, &CMatrix::zeros(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_conserved_operator() {
        let setup = pair(2, 1, 0.01, 0.0).setup(beta(1.0), 1.0).unwrap();
        let x = annihilation(2, 1).unwrap() + creation(2, 1).unwrap();
        assert!(matches!(delta_expectation(&x, &setup), Err(Error::NotConserved { .. })));
    }

    #[test]
    fn zero_rates_give_zero() {
        let cfg = pair(3, 2, 0.0, 0.0);
        let setup = cfg.setup(beta(1.0), 1.0).unwrap();
        for k in 1..=3 {
            let nk = fermion_mode_number(3, k).unwrap();
            assert_eq!(delta_expectation(&nk, &setup).unwrap(), 0.0);
            assert_eq!(delta_nk_closed_form(&cfg, k, beta(1.0), 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn commuting_hermitian_jump_cancels() {
        let h = fermion::build_fermion_chain(2, 1.0).unwrap();
        let spectrum = crate::hilbert::eig_hermitian(&h).unwrap();
        let n1 = fermion_mode_number(2, 1).unwrap();
        let setup = PerturbationSetup::new(spectrum, beta(0.7), 1.0, vec![(n1.clone(), 0.05)]).unwrap();
        assert!(delta_expectation(&n1, &setup).unwrap().abs() < 1e-14);
    }

    #[test]
    fn infinite_temperature_bracket() {
        let cfg = pair(4, 2, 0.01, 0.03);
        let k = 1;
        let amp = fermion::mode_amplitudes(4, k).unwrap()[1];
        let expected = amp * amp * (0.03 - 0.01) / 2.0;
        let got = delta_nk_closed_form(&cfg, k, InverseTemperature::ZERO, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_generic() {
        for length in [2, 3, 4] {
            for site in 1..=length {
                for b in [0.0, 1.0, 5.0] {
                    let cfg = pair(length, site, 0.013, 0.007);
                    let setup = cfg.setup(beta(b), 1.3).unwrap();
                    for k in 1..=length {
                        let nk = fermion_mode_number(length, k).unwrap();
                        let generic = delta_expectation(&nk, &setup).unwrap();
                        let closed = delta_nk_closed_form(&cfg, k, beta(b), 1.3).unwrap();
                        assert!((generic - closed).abs() < 1e-10, "L={length} l={site} b={b} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn sign_follows_reservoir() {
        for k in 1..=3 {
            let inject = delta_nk_closed_form(&pair(3, 1, 0.0, 0.01), k, beta(1.0), 1.0).unwrap();
            let remove = delta_nk_closed_form(&pair(3, 1, 0.01, 0.0), k, beta(1.0), 1.0).unwrap();
            assert!(inject >= 0.0 && remove <= 0.0);
        }
    }

    #[test]
    fn first_order_against_exact_steady_state() {
        let mut errs = Vec::new();
        for eps in [1e-2, 1e-3] {
            let cfg = pair(3, 2, eps, 0.5 * eps);
            let setup = cfg.setup(beta(1.0), 1.0).unwrap();
            let n1 = fermion_mode_number(3, 1).unwrap();
            let first = delta_expectation(&n1, &setup).unwrap();
            let exact = exact_shift(&n1, &setup).unwrap();
            errs.push((first - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 50.0 && ratio < 200.0, "ratio {ratio}");
    }

    #[test]
    fn commutator_term_vanishes_on_steady_state() {
        let setup = pair(3, 1, 0.02, 0.01).setup(beta(1.0), 1.0).unwrap();
        let rho = steady_state(&setup.generator().unwrap()).unwrap();
        let h = setup.spectrum.hamiltonian();
        for k in 1..=3 {
            let nk = fermion_mode_number(3, k).unwrap();
            assert!(commutator_term(&nk, &h, &rho).norm() <= 1e-9 * frobenius(&nk));
        }
    }
}
