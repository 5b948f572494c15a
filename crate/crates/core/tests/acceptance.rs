//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rta_lindblad::fermion::{build_fermion_chain, fermi_function, fermion_mode_number, single_particle_energies};
use rta_lindblad::hilbert::{eig_hermitian, expectation, gibbs_state, DensityMatrix, InverseTemperature, Spectrum};
use rta_lindblad::linalg::{self, CMatrix};
use rta_lindblad::lindblad::{evolve, evolve_with_schedule, lindblad_rhs, rta_jump_set, steady_state, LindbladGenerator};
use rta_lindblad::perturbation::{delta_expectation, delta_nk_closed_form, exact_shift, LocalReservoirPair};
use rta_lindblad::quench::{quench_state, TemperatureSchedule};
use rta_lindblad::random::{random_density, random_hermitian, rng};
use rta_lindblad::scaling::{
    fermi_residual_energy_3d, fit_exponent, log_grid, power_law_curve, run_experiment, table1_report,
    ScalingExperiment, ScheduleFamily, Table1Config, Verdict,
};
use rta_lindblad::Result;

/// Worst structural deviations over every state checked.
#[derive(Default)]
struct Invariants {
    trace: f64,
    hermiticity: f64,
    min_eigenvalue: f64,
    states: usize,
}

impl Invariants {
    fn record(&mut self, rho: &DensityMatrix) {
        let m = rho.matrix();
        self.trace = self.trace.max((m.trace() - linalg::c(1.0)).norm());
        self.hermiticity = self.hermiticity.max(linalg::hermiticity_defect(m));
        self.min_eigenvalue = self.min_eigenvalue.min(rho.min_eigenvalue());
        self.states += 1;
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn beta(b: f64) -> InverseTemperature {
    InverseTemperature::new(b).unwrap()
}

fn criterion_1() -> Result<Outcome> {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in [2, 3, 4, 6] {
        for b in [0.0, 0.5, 2.0] {
            for _ in 0..20 {
                let spec = eig_hermitian(&random_hermitian(&mut r, n))?;
                let compact = LindbladGenerator::relaxation_only(spec.clone(), beta(b), 1.0)?;
                let explicit = LindbladGenerator::new(spec.hamiltonian())?.with_jumps(rta_jump_set(&spec, beta(b), 1.0)?)?;
                for _ in 0..10 {
                    let rho = random_density(&mut r, n);
                    let d = linalg::max_abs_diff(&lindblad_rhs(&compact, &rho)?, &lindblad_rhs(&explicit, &rho)?);
                    worst = worst.max(d);
                    cases += 1;
                }
            }
        }
    }
    check(worst <= 1e-10, format!("max deviation {worst:.2e} over {cases} states (tol 1e-10)"))
}

fn criterion_2(inv: &mut Invariants) -> Result<Outcome> {
    let mut r = rng(202);
    let gamma0 = 1.0;
    let times: Vec<f64> = (0..=30).map(|i| i as f64 / gamma0).collect();
    let mut worst_relax = 0.0f64;
    let mut worst_fixed = 0.0f64;
    for (i, n) in [2, 3, 4, 6, 2, 3, 4, 6, 3, 4].into_iter().enumerate() {
        let spec = eig_hermitian(&random_hermitian(&mut r, n))?;
        let b = beta([0.0, 0.5, 2.0][i % 3]);
        let gen = LindbladGenerator::relaxation_only(spec.clone(), b, gamma0)?;
        let rho_e = gibbs_state(&spec, b);
        let traj = evolve(&gen, &random_density(&mut r, n), &times, gen.default_step())?;
        traj.states.iter().for_each(|s| inv.record(s));
        worst_relax = worst_relax.max(traj.final_state().trace_distance(&rho_e));
        let fixed = evolve(&gen, &rho_e, &times, gen.default_step())?;
        for s in &fixed.states {
            inv.record(s);
            worst_fixed = worst_fixed.max(linalg::max_abs_diff(s.matrix(), rho_e.matrix()));
        }
    }
    check(
        worst_relax < 1e-6 && worst_fixed <= 1e-10,
        format!("trace distance at t=30/gamma0 {worst_relax:.2e} (tol 1e-6); Gibbs drift {worst_fixed:.2e} (tol 1e-10)"),
    )
}

fn criterion_3(inv: &mut Invariants) -> Result<Outcome> {
    let two_level = eig_hermitian(&CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        linalg::c(-0.5),
        linalg::c(0.5),
    ])))?;
    let chain = eig_hermitian(&build_fermion_chain(4, 1.0)?)?;
    let systems: [(&str, &Spectrum); 2] = [("two-level", &two_level), ("L=4 chain", &chain)];
    let gamma0 = 1.0;
    let mut worst = 0.0f64;
    for (_, spec) in systems {
        for tau in [1.0, 10.0, 100.0] {
            for schedule in [
                TemperatureSchedule::linear_cooling(1.0, tau)?,
                TemperatureSchedule::linear_heating(1.0, tau)?,
            ] {
                let b0 = schedule.beta_at(0.0);
                let gen = LindbladGenerator::relaxation_only(spec.clone(), b0, gamma0)?;
                let times: Vec<f64> = (0..=10).map(|i| tau * i as f64 / 10.0).collect();
                let traj = evolve_with_schedule(&gen, &gibbs_state(spec, b0), &times, gen.default_step(), |t| {
                    schedule.beta_at(t)
                })?;
                for (t, s) in traj.times.iter().zip(&traj.states).skip(1) {
                    inv.record(s);
                    worst = worst.max(s.trace_distance(&quench_state(spec, &schedule, gamma0, *t)?));
                }
            }
        }
    }
    check(worst <= 1e-6, format!("max trace distance {worst:.2e} over 120 checkpoints (tol 1e-6)"))
}

fn criterion_4() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for psi in [0.5, 1.0, 2.0, 3.0] {
        let exp = ScalingExperiment::new(
            power_law_curve(psi, 1.0)?,
            ScheduleFamily::Heating { t_crit: 1.0 },
            1.0,
            log_grid(1e2, 1e4, 17),
        )?;
        let fit = fit_exponent(&run_experiment(&exp)?)?;
        ok &= (fit.exponent - psi).abs() <= 0.05 * psi;
        parts.push(format!("psi={psi}: {:.4}", fit.exponent));
    }
    check(ok, format!("{} (tol 5%)", parts.join(", ")))
}

fn criterion_5() -> Result<Outcome> {
    let exp = ScalingExperiment::new(
        fermi_residual_energy_3d(),
        ScheduleFamily::Cooling { t0: 1.0 },
        1.0,
        log_grid(1e2, 1e4, 17),
    )?;
    let fit = fit_exponent(&run_experiment(&exp)?)?;
    check(
        (fit.exponent - 2.0).abs() <= 0.2,
        format!("fitted exponent {:.4} +/- {:.1e} (reference 2, tol 10%)", fit.exponent, fit.stderr),
    )
}

fn criterion_6() -> Result<Outcome> {
    let report = table1_report(&Table1Config::default());
    let in_scope: Vec<_> = report.rows.iter().filter(|r| r.verdict != Verdict::OutOfScope).collect();
    let explicit = in_scope
        .iter()
        .all(|r| matches!(r.verdict, Verdict::Agree | Verdict::Disagree) && r.fit.is_some());
    let out_of_scope = report.rows.len() - in_scope.len();
    let summary: Vec<String> = report
        .rows
        .iter()
        .map(|r| match (&r.fit, r.reference_exponent) {
            (Some(f), Some(e)) => format!("{:.3} vs {e}: {}", f.exponent, r.verdict),
            _ => r.verdict.to_string(),
        })
        .collect();
    check(
        report.rows.len() == 5 && in_scope.len() == 4 && out_of_scope == 1 && explicit,
        format!("rows [{}]", summary.join("; ")),
    )
}

fn criterion_7(inv: &mut Invariants) -> Result<Outcome> {
    let (length, site) = (4, 2);
    let (b, gamma0) = (beta(1.0), 1.0);
    let mut rel_err = Vec::new();
    let mut abs_err = Vec::new();
    let mut closed_vs_generic = 0.0f64;
    for eps in [1e-2, 1e-3] {
        let cfg = LocalReservoirPair {
            site,
            eps_an: eps,
            eps_cr: 0.5 * eps,
            length,
            t_hop: 1.0,
        };
        let setup = cfg.setup(b, gamma0)?;
        inv.record(&steady_state(&setup.generator()?)?);
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        for k in 1..=length {
            let nk = fermion_mode_number(length, k)?;
            let first = delta_expectation(&nk, &setup)?;
            let exact = exact_shift(&nk, &setup)?;
            err = err.max((first - exact).abs());
            scale = scale.max(exact.abs());
            closed_vs_generic = closed_vs_generic.max((first - delta_nk_closed_form(&cfg, k, b, gamma0)?).abs());
        }
        abs_err.push(err);
        rel_err.push(err / scale);
    }
    let shrink = rel_err[0] / rel_err[1];
    check(
        (5.0..=20.0).contains(&shrink) && closed_vs_generic <= 1e-10,
        format!(
            "relative first-order error shrink {shrink:.2} (range [5, 20]; absolute shrink {:.1}); closed form vs generic {closed_vs_generic:.2e} (tol 1e-10)",
            abs_err[0] / abs_err[1]
        ),
    )
}

fn criterion_8(inv: &Invariants) -> Result<Outcome> {
    check(
        inv.trace <= 1e-9 && inv.hermiticity <= 1e-10 && inv.min_eigenvalue >= -1e-8,
        format!(
            "{} states: trace drift {:.2e} (tol 1e-9), Hermiticity {:.2e} (tol 1e-10), min eigenvalue {:.2e} (tol -1e-8)",
            inv.states, inv.trace, inv.hermiticity, inv.min_eigenvalue
        ),
    )
}

fn criterion_9() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for length in [2, 4, 6] {
        let spec = eig_hermitian(&build_fermion_chain(length, 1.0)?)?;
        let energies = single_particle_energies(length, 1.0);
        for b in [0.0, 1.0, 5.0] {
            let rho = gibbs_state(&spec, beta(b));
            for k in 1..=length {
                let nk = expectation(&rho, &fermion_mode_number(length, k)?)?.re;
                worst = worst.max((nk - fermi_function(energies[k - 1], b)).abs());
            }
        }
    }
    check(worst <= 1e-8, format!("max |<n_k> - f(eps_k)| {worst:.2e} (tol 1e-8)"))
}

fn main() -> ExitCode {
    let mut inv = Invariants::default();
    let mut all = true;
    let mut run = |id: u32, name: &str, limit: Duration, f: &mut dyn FnMut() -> Result<Outcome>| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(o) => (o.passed && elapsed <= limit, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= passed;
        println!(
            "criterion {id} {}: {name}: {detail} [{:.2}s, limit {}s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    };
    let s = Duration::from_secs;
    run(1, "jump set equals compact relaxation form", s(10), &mut criterion_1);
    run(2, "relaxation to and stationarity of the Gibbs state", s(30), &mut || criterion_2(&mut inv));
    run(3, "exact quench solution matches direct integration", s(120), &mut || criterion_3(&mut inv));
    run(4, "power-law exponents recovered from synthetic curves", s(60), &mut criterion_4);
    run(5, "3D Fermi gas residual energy exponent", s(120), &mut criterion_5);
    run(6, "reference-system report completes with verdicts", s(300), &mut criterion_6);
    run(7, "first-order perturbation vs exact steady state", s(120), &mut || criterion_7(&mut inv));
    run(8, "structural invariants of produced states", s(1), &mut || criterion_8(&inv));
    run(9, "Gibbs mode occupations equal the Fermi function", s(30), &mut criterion_9);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
