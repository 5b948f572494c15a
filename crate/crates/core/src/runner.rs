//! Executes a [`RunConfig`] and writes CSV outputs.
//!
//! Every file starts with `# config_hash=<sha256> version=<crate version>`,
//! followed by a header row. Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{info, warn};
use sha2::{Digest, Sha256};

use crate::config::{
    read_matrix_file, Command, EvolveConfig, Family, InitialState, ModelConfig, RunConfig, ScheduleConfig,
};
use crate::error::Error;
use crate::fermion;
use crate::hilbert::{eig_hermitian, expectation, gibbs_state, DensityMatrix, InverseTemperature, Operator, Spectrum};
use crate::lindblad::{evolve, evolve_with_schedule, LindbladGenerator};
use crate::perturbation::{delta_expectation, delta_nk_closed_form, exact_shift, LocalReservoirPair};
use crate::quench::{quench_state, EquilibriumCurve, TemperatureSchedule};
use crate::random;
use crate::scaling::{
    builtin_curve, fit_exponent, log_grid, power_law_curve, run_experiment, table1_report, ScalingExperiment,
    ScheduleFamily, Table1Config,
};
use crate::validation;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// False when `validate` found failing checks.
    pub success: bool,
    pub summary: String,
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Csv {
    text: String,
}

impl Csv {
    fn new(hash: &str, header: &[&str]) -> Self {
        let mut text = format!("# config_hash={hash} version={}\n", env!("CARGO_PKG_VERSION"));
        text.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
        text.push('\n');
        Self { text }
    }

    fn row(&mut self, fields: &[String]) {
        let line = fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
        let _ = writeln!(self.text, "{line}");
    }

    fn write(self, dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, self.text).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
        files.push(path);
        Ok(())
    }
}

/// SHA-256 over the config text and any referenced input file.
pub fn config_hash(cfg: &RunConfig, config_text: &str) -> anyhow::Result<String> {
    let mut h = Sha256::new();
    h.update(config_text.as_bytes());
    if let Some(ModelConfig::ExplicitMatrix { file }) = &cfg.model {
        h.update(fs::read(file).with_context(|| format!("reading {}", file.display()))?);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

struct Model {
    hamiltonian: Operator,
    spectrum: Spectrum,
    /// Chain length for chain models.
    length: Option<usize>,
}

fn build_model(cfg: &RunConfig) -> anyhow::Result<Model> {
    let model = cfg.model.as_ref().context("missing `[model]` section")?;
    let (hamiltonian, length) = match model {
        ModelConfig::FermionChain { length, t_hop } => (fermion::build_fermion_chain(*length, *t_hop)?, Some(*length)),
        ModelConfig::ExplicitMatrix { file } => (read_matrix_file(file)?, None),
    };
    let spectrum = eig_hermitian(&hamiltonian)?;
    Ok(Model {
        hamiltonian,
        spectrum,
        length,
    })
}

/// Observable by name: `H`, `N`, `n_site:l`, `n_mode:k` (chains), or
/// `population:i` (projector on the i-th eigenstate, 0-based, ascending energy).
fn observable(model: &Model, name: &str) -> anyhow::Result<Operator> {
    let index = |prefix: &str| -> Option<anyhow::Result<usize>> {
        name.strip_prefix(prefix)
            .map(|s| s.parse::<usize>().with_context(|| format!("observable `{name}`: bad index")))
    };
    let chain = || model.length.with_context(|| format!("observable `{name}` needs a fermion_chain model"));
    if name == "H" {
        return Ok(model.hamiltonian.clone());
    }
    if name == "N" {
        return Ok(fermion::total_number(chain()?)?);
    }
    if let Some(l) = index("n_site:") {
        return Ok(fermion::site_number(chain()?, l?)?);
    }
    if let Some(k) = index("n_mode:") {
        return Ok(fermion::fermion_mode_number(chain()?, k?)?);
    }
    if let Some(i) = index("population:") {
        let i = i?;
        let n = model.spectrum.dim();
        if i >= n {
            bail!("observable `{name}`: index must be below {n}");
        }
        let mut values = vec![0.0; n];
        values[i] = 1.0;
        return Ok(model.spectrum.compose(&values));
    }
    bail!("unknown observable `{name}` (expected H, N, n_site:l, n_mode:k or population:i)")
}

fn observables(model: &Model, names: &[String]) -> anyhow::Result<Vec<(String, Operator)>> {
    let names: Vec<String> = if names.is_empty() { vec!["H".into()] } else { names.to_vec() };
    names
        .into_iter()
        .map(|n| observable(model, &n).map(|op| (n, op)))
        .collect()
}

fn schedule(cfg: &ScheduleConfig) -> crate::Result<TemperatureSchedule> {
    match cfg {
        ScheduleConfig::Constant { temperature, tau } => TemperatureSchedule::constant(*temperature, *tau),
        ScheduleConfig::LinearCooling { t0, tau } => TemperatureSchedule::linear_cooling(*t0, *tau),
        ScheduleConfig::LinearHeating { t_crit, tau } => TemperatureSchedule::linear_heating(*t_crit, *tau),
        ScheduleConfig::Tabulated { points } => {
            let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
            TemperatureSchedule::tabulated(&pts)
        }
    }
}

fn uniform_times(end: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i == n - 1 { end } else { end * i as f64 / (n - 1) as f64 })
        .collect()
}

fn expect_re(rho: &DensityMatrix, op: &Operator) -> crate::Result<f64> {
    Ok(expectation(rho, op)?.re)
}

pub fn run(cfg: &RunConfig, config_text: &str, opts: &RunOptions) -> anyhow::Result<RunOutcome> {
    let hash = config_hash(cfg, config_text)?;
    fs::create_dir_all(&opts.output_dir)
        .with_context(|| format!("creating output directory {}", opts.output_dir.display()))?;
    let mut files = Vec::new();
    let dir = opts.output_dir.as_path();
    let mut success = true;
    let summary = match cfg.command() {
        Command::Evolve => run_evolve(cfg, cfg.evolve.as_ref().context("missing `[evolve]`")?, &hash, opts, &mut files)?,
        Command::Quench => {
            let model = build_model(cfg)?;
            let q = cfg.quench.clone().unwrap_or_default();
            let obs = observables(&model, &q.observables)?;
            let sched = schedule(cfg.schedule.as_ref().context("missing `[schedule]`")?)?;
            let mut header = vec!["t"];
            header.extend(obs.iter().map(|(n, _)| n.as_str()));
            let mut csv = Csv::new(&hash, &header);
            for t in uniform_times(sched.tau(), q.n_out) {
                let rho = quench_state(&model.spectrum, &sched, cfg.rta.gamma0, t)?;
                let mut row = vec![fmt_num(t)];
                for (_, op) in &obs {
                    row.push(fmt_num(expect_re(&rho, op)?));
                }
                csv.row(&row);
            }
            csv.write(dir, "quench.csv", &mut files)?;
            format!("quench: {} output times", q.n_out)
        }
        Command::Scaling => {
            let s = cfg.scaling.as_ref().context("missing `[scaling]`")?;
            let curve = match s.curve.as_str() {
                "power_law" => power_law_curve(s.psi.context("scaling.psi")?, s.t_crit)?,
                "model_observable" => {
                    let model = build_model(cfg)?;
                    let name = s.observable.as_deref().context("scaling.observable")?;
                    EquilibriumCurve::from_observable(name, &model.spectrum, &observable(&model, name)?)?
                }
                name => builtin_curve(name).with_context(|| format!("unknown curve `{name}`"))?,
            };
            let family = match s.family {
                Family::Cooling => ScheduleFamily::Cooling { t0: s.t0 },
                Family::Heating => ScheduleFamily::Heating { t_crit: s.t_crit },
            };
            let mut exp = ScalingExperiment::new(curve, family, cfg.rta.gamma0, log_grid(s.tau_min, s.tau_max, s.n_tau))?;
            exp.include_initial_term = s.include_initial_term;
            let table = run_experiment(&exp)?;
            let mut csv = Csv::new(&hash, &["tau", "value"]);
            for (tau, v) in &table {
                csv.row(&[fmt_num(*tau), fmt_num(*v)]);
            }
            csv.write(dir, "scaling.csv", &mut files)?;
            let fit = fit_exponent(&table)?;
            let mut csv = Csv::new(
                &hash,
                &["curve", "family", "exponent", "stderr", "tau_lo", "tau_hi", "r_squared", "points"],
            );
            csv.row(&[
                exp.curve.label().to_string(),
                family.name().to_string(),
                fmt_num(fit.exponent),
                fmt_num(fit.stderr),
                fmt_num(fit.window.0),
                fmt_num(fit.window.1),
                fmt_num(fit.r_squared),
                fit.points.to_string(),
            ]);
            csv.write(dir, "scaling_fit.csv", &mut files)?;
            format!("scaling: exponent {:.4} +/- {:.2e}", fit.exponent, fit.stderr)
        }
        Command::Perturb => {
            let p = cfg.perturb.as_ref().context("missing `[perturb]`")?;
            let Some(ModelConfig::FermionChain { length, t_hop }) = cfg.model.clone() else {
                bail!("perturb requires a fermion_chain model");
            };
            let pair = LocalReservoirPair {
                site: p.site,
                eps_an: p.eps_an,
                eps_cr: p.eps_cr,
                length,
                t_hop,
            };
            let beta = InverseTemperature::new(cfg.rta.beta)?;
            let setup = pair.setup(beta, cfg.rta.gamma0)?;
            let mut csv = Csv::new(&hash, &["k", "delta_nk_closed", "delta_generic", "exact_oracle", "abs_err"]);
            for k in 1..=length {
                let nk = fermion::fermion_mode_number(length, k)?;
                let closed = delta_nk_closed_form(&pair, k, beta, cfg.rta.gamma0)?;
                let generic = delta_expectation(&nk, &setup)?;
                let exact = match exact_shift(&nk, &setup) {
                    Ok(v) => v,
                    Err(e @ Error::SizeLimit { .. }) => {
                        warn!("exact oracle skipped: {e}");
                        f64::NAN
                    }
                    Err(e) => return Err(e.into()),
                };
                csv.row(&[
                    k.to_string(),
                    fmt_num(closed),
                    fmt_num(generic),
                    fmt_num(exact),
                    fmt_num((generic - exact).abs()),
                ]);
            }
            csv.write(dir, "perturb.csv", &mut files)?;
            format!("perturb: {length} modes")
        }
        Command::Table1 => {
            let t = cfg.table1.clone().unwrap_or_default();
            let report = table1_report(&Table1Config {
                gamma0: cfg.rta.gamma0,
                tau_min: t.tau_min,
                tau_max: t.tau_max,
                n_tau: t.n_tau,
                chain_length: t.chain_length,
                ..Table1Config::default()
            });
            let mut csv = Csv::new(&hash, &["system", "fitted_exponent", "stderr", "table1_value", "verdict"]);
            let mut lines = Vec::new();
            for row in report.rows.iter().chain(&report.self_checks) {
                let (e, s) = row.fit.map_or((f64::NAN, f64::NAN), |f| (f.exponent, f.stderr));
                let reference = row.reference_exponent.map_or_else(|| row.reference.clone(), fmt_num);
                csv.row(&[row.system.clone(), fmt_num(e), fmt_num(s), reference, row.verdict.to_string()]);
                lines.push(format!("{}: {}", row.system, row.verdict));
            }
            csv.write(dir, "table1.csv", &mut files)?;
            lines.join("\n")
        }
        Command::Validate => {
            let trials = cfg.validate.clone().unwrap_or_default().trials;
            let results = validation::run_suite(opts.seed, trials);
            let mut csv = Csv::new(&hash, &["check", "max_error", "tolerance", "passed", "failure"]);
            for r in &results {
                csv.row(&[
                    r.name.to_string(),
                    fmt_num(r.max_error),
                    fmt_num(r.tolerance),
                    r.passed().to_string(),
                    r.failure.clone().unwrap_or_default(),
                ]);
            }
            csv.write(dir, "validate.csv", &mut files)?;
            let passed = results.iter().filter(|r| r.passed()).count();
            let failed = results.len() - passed;
            success = failed == 0;
            let mut text = format!("validate: {passed} passed, {failed} failed");
            for r in results.iter().filter(|r| !r.passed()) {
                let _ = write!(
                    text,
                    "\n  FAIL {}: max error {:e} > {:e} {}",
                    r.name,
                    r.max_error,
                    r.tolerance,
                    r.failure.as_deref().unwrap_or("")
                );
            }
            text
        }
    };
    Ok(RunOutcome {
        files,
        success,
        summary,
    })
}

fn run_evolve(
    cfg: &RunConfig,
    e: &EvolveConfig,
    hash: &str,
    opts: &RunOptions,
    files: &mut Vec<PathBuf>,
) -> anyhow::Result<String> {
    let model = build_model(cfg)?;
    let obs = observables(&model, &e.observables)?;
    let n = model.spectrum.dim();
    let beta = InverseTemperature::new(cfg.rta.beta)?;
    let rho0 = match e.initial {
        InitialState::Gibbs => gibbs_state(&model.spectrum, InverseTemperature::new(e.initial_beta.unwrap_or(cfg.rta.beta))?),
        InitialState::MaximallyMixed => DensityMatrix::maximally_mixed(n),
        InitialState::Ground => gibbs_state(&model.spectrum, InverseTemperature::INFINITE),
        InitialState::Random => random::random_density(&mut random::rng(opts.seed), n),
    };
    let times = uniform_times(e.t_final, e.n_out);
    let traj = match &cfg.schedule {
        Some(sc) => {
            let sched = schedule(sc)?;
            if e.t_final > sched.tau() {
                bail!("invalid `evolve.t_final`: exceeds schedule duration {}", sched.tau());
            }
            let gen = LindbladGenerator::relaxation_only(model.spectrum.clone(), sched.beta_at(0.0), cfg.rta.gamma0)?;
            let step = e.step.unwrap_or_else(|| gen.default_step());
            evolve_with_schedule(&gen, &rho0, &times, step, |t| sched.beta_at(t))?
        }
        None => {
            let gen = LindbladGenerator::relaxation_only(model.spectrum.clone(), beta, cfg.rta.gamma0)?;
            let step = e.step.unwrap_or_else(|| gen.default_step());
            evolve(&gen, &rho0, &times, step)?
        }
    };
    let mut header = vec!["t"];
    header.extend(obs.iter().map(|(n, _)| n.as_str()));
    header.extend(["trace", "min_eigenvalue"]);
    let mut csv = Csv::new(hash, &header);
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![fmt_num(*t)];
        for (_, op) in &obs {
            row.push(fmt_num(expect_re(rho, op)?));
        }
        row.push(fmt_num(rho.matrix().trace().re));
        row.push(fmt_num(rho.min_eigenvalue()));
        csv.row(&row);
    }
    csv.write(&opts.output_dir, "evolve.csv", files)?;
    Ok(format!("evolve: {} output times", times.len()))
}
