use proptest::prelude::*;

use rta_lindblad::fermion;
use rta_lindblad::hilbert::{eig_hermitian, gibbs_state, InverseTemperature, Spectrum};
use rta_lindblad::linalg;
use rta_lindblad::lindblad::{lindblad_rhs, rta_jump_set, JumpOperator, LindbladGenerator};
use rta_lindblad::perturbation::{delta_nk_closed_form, LocalReservoirPair};
use rta_lindblad::quench::{quench_populations, TemperatureSchedule};
use rta_lindblad::random::{random_density, random_hermitian, rng};
use rta_lindblad::scaling::{fit_exponent, log_grid};

fn spectrum(seed: u64, n: usize) -> Spectrum {
    eig_hermitian(&random_hermitian(&mut rng(seed), n)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gibbs_state_is_a_density_matrix(seed in any::<u64>(), n in 1usize..7, beta in 0.0f64..20.0) {
        let rho = gibbs_state(&spectrum(seed, n), InverseTemperature::new(beta).unwrap());
        let m = rho.matrix();
        prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(linalg::hermiticity_defect(m) < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn gibbs_populations_decrease_with_energy(seed in any::<u64>(), n in 2usize..7, beta in 0.0f64..10.0) {
        let spec = spectrum(seed, n);
        let rho = gibbs_state(&spec, InverseTemperature::new(beta).unwrap());
        let pops = spec.to_eigenbasis(rho.matrix());
        for i in 1..n {
            prop_assert!(pops[(i, i)].re <= pops[(i - 1, i - 1)].re + 1e-14);
        }
    }

    #[test]
    fn rhs_is_traceless_and_hermitian(seed in any::<u64>(), n in 1usize..6, beta in 0.0f64..5.0, gamma0 in 0.1f64..5.0) {
        let mut r = rng(seed ^ 0x5eed);
        let spec = spectrum(seed, n);
        let jump = JumpOperator::new(random_hermitian(&mut r, n) + random_hermitian(&mut r, n) * linalg::I);
        let gen = LindbladGenerator::relaxation_only(spec, InverseTemperature::new(beta).unwrap(), gamma0)
            .unwrap()
            .with_jump(jump)
            .unwrap();
        let rhs = lindblad_rhs(&gen, &random_density(&mut r, n)).unwrap();
        prop_assert!(rhs.trace().norm() < 1e-12);
        prop_assert!(linalg::hermiticity_defect(&rhs) < 1e-12);
    }

    #[test]
    fn jump_set_equals_compact_form(seed in any::<u64>(), n in 1usize..6, beta in 0.0f64..5.0, gamma0 in 0.1f64..5.0) {
        let spec = spectrum(seed, n);
        let b = InverseTemperature::new(beta).unwrap();
        let compact = LindbladGenerator::relaxation_only(spec.clone(), b, gamma0).unwrap();
        let explicit = LindbladGenerator::new(spec.hamiltonian())
            .unwrap()
            .with_jumps(rta_jump_set(&spec, b, gamma0).unwrap())
            .unwrap();
        let rho = random_density(&mut rng(seed.wrapping_add(1)), n);
        let d = linalg::max_abs_diff(&lindblad_rhs(&compact, &rho).unwrap(), &lindblad_rhs(&explicit, &rho).unwrap());
        prop_assert!(d < 1e-10 * gamma0.max(1.0));
    }

    #[test]
    fn quench_populations_form_a_distribution(seed in any::<u64>(), n in 1usize..6, tau in 0.1f64..50.0, frac in 0.0f64..=1.0) {
        let spec = spectrum(seed, n);
        let schedule = TemperatureSchedule::linear_cooling(1.5, tau).unwrap();
        let pops = quench_populations(spec.energies(), &schedule, 1.0, frac * tau).unwrap();
        prop_assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pops.iter().all(|&p| p >= -1e-15));
    }

    #[test]
    fn fit_invariant_under_rescaling(psi in 0.2f64..4.0, scale in 1e-6f64..1e6, wiggle in 0.0f64..0.05) {
        let table: Vec<(f64, f64)> = log_grid(1e2, 1e4, 13)
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, t.powf(-psi) * (1.0 + wiggle * (i as f64).sin())))
            .collect();
        let scaled: Vec<(f64, f64)> = table.iter().map(|&(t, v)| (t, scale * v)).collect();
        let a = fit_exponent(&table).unwrap();
        let b = fit_exponent(&scaled).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
        prop_assert!((a.stderr - b.stderr).abs() < 1e-9);
    }

    #[test]
    fn reservoir_shift_sign(length in 1usize..8, site_frac in 0.0f64..1.0, k_frac in 0.0f64..1.0, beta in 0.0f64..10.0, eps in 0.0f64..0.1) {
        let site = 1 + ((length as f64 * site_frac) as usize).min(length - 1);
        let k = 1 + ((length as f64 * k_frac) as usize).min(length - 1);
        let b = InverseTemperature::new(beta).unwrap();
        let inject = LocalReservoirPair { site, eps_an: 0.0, eps_cr: eps, length, t_hop: 1.0 };
        let remove = LocalReservoirPair { eps_an: eps, eps_cr: 0.0, ..inject };
        prop_assert!(delta_nk_closed_form(&inject, k, b, 1.0).unwrap() >= 0.0);
        prop_assert!(delta_nk_closed_form(&remove, k, b, 1.0).unwrap() <= 0.0);
    }

    #[test]
    fn chain_number_operators_commute_with_hamiltonian(length in 1usize..6, t_hop in -2.0f64..2.0, k_frac in 0.0f64..1.0) {
        let k = 1 + ((length as f64 * k_frac) as usize).min(length - 1);
        let h = fermion::build_fermion_chain(length, t_hop).unwrap();
        let nk = fermion::fermion_mode_number(length, k).unwrap();
        prop_assert!(linalg::frobenius(&linalg::commutator(&nk, &h)) < 1e-12);
    }
}
