//! Run configuration, read from TOML.
//!
//! ```toml
//! command = "quench"
//!
//! [model]
//! kind = "fermion_chain"   # or "explicit_matrix" with `file = "h.txt"`
//! length = 4
//! t_hop = 1.0
//!
//! [rta]
//! gamma0 = 1.0
//! beta = 1.0
//!
//! [schedule]
//! kind = "linear_cooling"
//! t0 = 1.0
//! tau = 10.0
//!
//! [quench]
//! observables = ["H", "n_mode:1"]
//! n_out = 11
//! ```
//!
//! Unknown keys are rejected. Defaults: `gamma0 = 1`, `beta = 1`, `t_hop = 1`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::fermion;
use crate::hilbert::{check_hermitian, Operator};
use crate::linalg::CMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError(format!("invalid `{key}`: {reason}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Evolve,
    Quench,
    Scaling,
    Perturb,
    Table1,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Quench => "quench",
            Command::Scaling => "scaling",
            Command::Perturb => "perturb",
            Command::Table1 => "table1",
            Command::Validate => "validate",
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    FermionChain {
        length: usize,
        #[serde(default = "one")]
        t_hop: f64,
    },
    ExplicitMatrix {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtaConfig {
    #[serde(default = "one")]
    pub gamma0: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for RtaConfig {
    fn default() -> Self {
        Self {
            gamma0: 1.0,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { temperature: f64, tau: f64 },
    LinearCooling { t0: f64, tau: f64 },
    LinearHeating { t_crit: f64, tau: f64 },
    /// `(time, temperature)` knots, first at time 0.
    Tabulated { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Gibbs state of the model at `rta.beta`.
    #[default]
    Gibbs,
    MaximallyMixed,
    Ground,
    /// Seeded random density matrix.
    Random,
}

fn default_n_out() -> usize {
    11
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub t_final: f64,
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub observables: Vec<String>,
    /// RK4 step; defaults to the generator's suggestion.
    pub step: Option<f64>,
    /// Start from this inverse temperature's Gibbs state, relaxing to `rta.beta`.
    pub initial_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    #[serde(default)]
    pub observables: Vec<String>,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            n_out: default_n_out(),
            observables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cooling,
    Heating,
}

fn default_tau_min() -> f64 {
    1e2
}
fn default_tau_max() -> f64 {
    1e4
}
fn default_n_tau() -> usize {
    17
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// `power_law`, `model_observable`, or a built-in curve name.
    pub curve: String,
    pub psi: Option<f64>,
    /// Observable for `model_observable`.
    pub observable: Option<String>,
    pub family: Family,
    #[serde(default = "one")]
    pub t0: f64,
    #[serde(default = "one")]
    pub t_crit: f64,
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_n_tau")]
    pub n_tau: usize,
    #[serde(default = "yes")]
    pub include_initial_term: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub site: usize,
    #[serde(default)]
    pub eps_an: f64,
    #[serde(default)]
    pub eps_cr: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Section {
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_n_tau")]
    pub n_tau: usize,
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
}

fn default_chain_length() -> usize {
    crate::scaling::DEFAULT_CHAIN_LENGTH
}

impl Default for Table1Section {
    fn default() -> Self {
        Self {
            tau_min: default_tau_min(),
            tau_max: default_tau_max(),
            n_tau: default_n_tau(),
            chain_length: default_chain_length(),
        }
    }
}

fn default_trials() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            trials: default_trials(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// May be omitted when the command comes from the command line.
    pub command: Option<Command>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub rta: RtaConfig,
    pub schedule: Option<ScheduleConfig>,
    pub evolve: Option<EvolveConfig>,
    pub quench: Option<QuenchConfig>,
    pub scaling: Option<ScalingConfig>,
    pub perturb: Option<PerturbConfig>,
    pub table1: Option<Table1Section>,
    pub validate: Option<ValidateConfig>,
    /// Output directory; the `--output` flag takes precedence.
    pub output: Option<PathBuf>,
}

/// Parses and validates `text`. Relative model files resolve against `base`;
/// `command`, when given, must agree with the file's `command` key.
pub fn parse_config(text: &str, base: &Path, command: Option<Command>) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(format!("config parse error: {e}")))?;
    cfg.command = match (cfg.command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(invalid(
                "command",
                format!("config says `{}` but `{}` was requested", a.name(), b.name()),
            ))
        }
        (a, b) => Some(a.or(b).ok_or_else(|| ConfigError("missing key `command`".into()))?),
    };
    if let Some(ModelConfig::ExplicitMatrix { file }) = &mut cfg.model {
        if file.is_relative() {
            *file = base.join(&*file);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be non-negative and finite, got {v}")))
    }
}

fn tau_range(section: &str, lo: f64, hi: f64, n: usize) -> Result<(), ConfigError> {
    positive(&format!("{section}.tau_min"), lo)?;
    positive(&format!("{section}.tau_max"), hi)?;
    if (hi / lo).log10() < 1.5 - 1e-12 {
        return Err(invalid(&format!("{section}.tau_max"), "tau range must span at least 1.5 decades"));
    }
    if n < 8 {
        return Err(invalid(&format!("{section}.n_tau"), format!("needs at least 8 points, got {n}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn command(&self) -> Command {
        self.command.expect("resolved by parse_config")
    }

    fn require_model(&self) -> Result<&ModelConfig, ConfigError> {
        self.model
            .as_ref()
            .ok_or_else(|| ConfigError(format!("missing `[model]` section required by `{}`", self.command().name())))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        positive("rta.gamma0", self.rta.gamma0)?;
        if !(self.rta.beta >= 0.0) {
            return Err(invalid("rta.beta", format!("must be >= 0, got {}", self.rta.beta)));
        }
        if let Some(model) = &self.model {
            match model {
                ModelConfig::FermionChain { length, t_hop } => {
                    if *length == 0 || *length > fermion::MAX_CHAIN_LENGTH {
                        return Err(invalid(
                            "model.length",
                            format!("must be in 1..={}, got {length}", fermion::MAX_CHAIN_LENGTH),
                        ));
                    }
                    if !t_hop.is_finite() {
                        return Err(invalid("model.t_hop", "must be finite"));
                    }
                }
                ModelConfig::ExplicitMatrix { file } => {
                    if !file.is_file() {
                        return Err(invalid("model.file", format!("{} does not exist", file.display())));
                    }
                }
            }
        }
        if let Some(s) = &self.schedule {
            match s {
                ScheduleConfig::Constant { temperature, tau } => {
                    non_negative("schedule.temperature", *temperature)?;
                    positive("schedule.tau", *tau)?;
                }
                ScheduleConfig::LinearCooling { t0, tau } => {
                    positive("schedule.t0", *t0)?;
                    positive("schedule.tau", *tau)?;
                }
                ScheduleConfig::LinearHeating { t_crit, tau } => {
                    positive("schedule.t_crit", *t_crit)?;
                    positive("schedule.tau", *tau)?;
                }
                ScheduleConfig::Tabulated { points } => {
                    if points.len() < 2 {
                        return Err(invalid("schedule.points", "needs at least two knots"));
                    }
                }
            }
        }
        let missing = |section: &str| {
            ConfigError(format!(
                "missing `[{section}]` section required by `{}`",
                self.command().name()
            ))
        };
        match self.command() {
            Command::Evolve => {
                self.require_model()?;
                let e = self.evolve.as_ref().ok_or_else(|| missing("evolve"))?;
                positive("evolve.t_final", e.t_final)?;
                if e.n_out < 2 {
                    return Err(invalid("evolve.n_out", "needs at least 2 output times"));
                }
                if let Some(step) = e.step {
                    positive("evolve.step", step)?;
                }
                if let Some(b) = e.initial_beta {
                    non_negative("evolve.initial_beta", b)?;
                }
            }
            Command::Quench => {
                self.require_model()?;
                if self.schedule.is_none() {
                    return Err(missing("schedule"));
                }
                let n_out = self.quench.as_ref().map_or(default_n_out(), |q| q.n_out);
                if n_out < 2 {
                    return Err(invalid("quench.n_out", "needs at least 2 output times"));
                }
            }
            Command::Scaling => {
                let s = self.scaling.as_ref().ok_or_else(|| missing("scaling"))?;
                tau_range("scaling", s.tau_min, s.tau_max, s.n_tau)?;
                positive("scaling.t0", s.t0)?;
                positive("scaling.t_crit", s.t_crit)?;
                match s.curve.as_str() {
                    "power_law" => positive("scaling.psi", s.psi.ok_or_else(|| invalid("scaling.psi", "required for curve = \"power_law\""))?)?,
                    "model_observable" => {
                        self.require_model()?;
                        if s.observable.is_none() {
                            return Err(invalid("scaling.observable", "required for curve = \"model_observable\""));
                        }
                    }
                    name if crate::scaling::builtin_curves().iter().any(|(n, _)| *n == name) => {}
                    other => return Err(invalid("scaling.curve", format!("unknown curve `{other}`"))),
                }
            }
            Command::Perturb => {
                let p = self.perturb.as_ref().ok_or_else(|| missing("perturb"))?;
                match self.require_model()? {
                    ModelConfig::FermionChain { length, .. } => {
                        if p.site == 0 || p.site > *length {
                            return Err(invalid("perturb.site", format!("must be in 1..={length}, got {}", p.site)));
                        }
                    }
                    ModelConfig::ExplicitMatrix { .. } => {
                        return Err(invalid("model.kind", "perturb requires a fermion_chain model"));
                    }
                }
                non_negative("perturb.eps_an", p.eps_an)?;
                non_negative("perturb.eps_cr", p.eps_cr)?;
            }
            Command::Table1 => {
                let t = self.table1.clone().unwrap_or_default();
                tau_range("table1", t.tau_min, t.tau_max, t.n_tau)?;
                if t.chain_length == 0 {
                    return Err(invalid("table1.chain_length", "must be positive"));
                }
            }
            Command::Validate => {
                let v = self.validate.clone().unwrap_or_default();
                if v.trials == 0 {
                    return Err(invalid("validate.trials", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

fn parse_complex(token: &str) -> Option<Complex64> {
    let t = token.trim();
    if let Some(body) = t.strip_suffix('j') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
        match split {
            Some(i) => Some(Complex64::new(body[..i].parse().ok()?, body[i..].parse().ok()?)),
            None => Some(Complex64::new(0.0, if body.is_empty() { 1.0 } else { body.parse().ok()? })),
        }
    } else {
        Some(Complex64::new(t.parse().ok()?, 0.0))
    }
}

/// Reads a Hamiltonian: first line `N`, then `N` rows of `N` whitespace
/// separated entries written as `re+imj` (a bare real is also accepted).
pub fn read_matrix_text(text: &str) -> Result<Operator, ConfigError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (ln, first) = lines.next().ok_or_else(|| ConfigError("matrix file is empty".into()))?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("line {}: expected dimension, got `{}`", ln + 1, first.trim())))?;
    if n == 0 {
        return Err(ConfigError(format!("line {}: dimension must be positive", ln + 1)));
    }
    let mut m = CMatrix::zeros(n, n);
    for row in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| ConfigError(format!("matrix file ends after {row} of {n} rows")))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != n {
            return Err(ConfigError(format!("line {}: expected {n} entries, found {}", ln + 1, tokens.len())));
        }
        for (col, tok) in tokens.iter().enumerate() {
            m[(row, col)] = parse_complex(tok)
                .ok_or_else(|| ConfigError(format!("line {}: cannot parse entry `{tok}`", ln + 1)))?;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(ConfigError(format!("line {}: unexpected content after {n} rows", ln + 1)));
    }
    check_hermitian(&m).map_err(|e| ConfigError(format!("matrix is not Hermitian: {e}")))?;
    Ok(m)
}

pub fn read_matrix_file(path: &Path) -> Result<Operator, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    read_matrix_text(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}
