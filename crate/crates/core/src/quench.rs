//! Exact relaxation-time dynamics under a time-dependent environment
//! temperature.
//!
//! With the system starting in equilibrium at `T(0)`, every term of the
//! relaxation equation commutes with `H`, so the state stays diagonal in the
//! energy eigenbasis and
//!
//! ```text
//! rho(t) = e^{-g t} rho_E(T(0)) + g * int_0^t e^{g (t' - t)} rho_E(T(t')) dt'
//! ```
//!
//! with `g = gamma0`. The same kernel applied to an equilibrium curve
//! `T -> <O>_T` gives the observable directly, without any Hilbert space.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{gibbs_weights, DensityMatrix, InverseTemperature, Operator, Spectrum};
use crate::linalg;
use crate::quadrature;

/// Relative tolerance of the memory-kernel quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Constant { temperature: f64 },
    /// `T(t) = T0 (1 - t/tau)`.
    LinearCooling { t0: f64 },
    /// `T(t) = T_crit t/tau`.
    LinearHeating { t_crit: f64 },
    Tabulated(MonotoneCubic),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSchedule {
    kind: ScheduleKind,
    tau: f64,
}

fn check_temperature(what: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter {
            what,
            reason: format!("must be a finite temperature >= 0, got {t}"),
        });
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            what: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    Ok(())
}

impl TemperatureSchedule {
    pub fn constant(temperature: f64, tau: f64) -> Result<Self> {
        check_temperature("temperature", temperature)?;
        check_tau(tau)?;
        Ok(Self {
            kind: ScheduleKind::Constant { temperature },
            tau,
        })
    }

    pub fn linear_cooling(t0: f64, tau: f64) -> Result<Self> {
        check_temperature("t0", t0)?;
        check_tau(tau)?;
        Ok(Self {
            kind: ScheduleKind::LinearCooling { t0 },
            tau,
        })
    }

    pub fn linear_heating(t_crit: f64, tau: f64) -> Result<Self> {
        check_temperature("t_crit", t_crit)?;
        check_tau(tau)?;
        Ok(Self {
            kind: ScheduleKind::LinearHeating { t_crit },
            tau,
        })
    }

    /// Schedule through `(time, temperature)` knots; the first knot must be
    /// at `t = 0` and the last one defines `tau`.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 || points[0].0 != 0.0 {
            return Err(Error::InvalidParameter {
                what: "table",
                reason: "needs at least two knots, the first at t = 0".into(),
            });
        }
        for &(_, temp) in points {
            check_temperature("table temperature", temp)?;
        }
        let tau = points[points.len() - 1].0;
        check_tau(tau)?;
        Ok(Self {
            kind: ScheduleKind::Tabulated(MonotoneCubic::new(points)?),
            tau,
        })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.tau) {
            return Err(Error::OutOfRange {
                what: "time",
                value: t,
                min: 0.0,
                max: self.tau,
            });
        }
        Ok(())
    }

    /// Temperature at `t` without range checking (clamped to `[0, tau]`).
    fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.tau);
        match &self.kind {
            ScheduleKind::Constant { temperature } => *temperature,
            ScheduleKind::LinearCooling { t0 } => (t0 * (1.0 - t / self.tau)).max(0.0),
            ScheduleKind::LinearHeating { t_crit } => t_crit * t / self.tau,
            ScheduleKind::Tabulated(table) => table.eval(t).max(0.0),
        }
    }

    /// Interior knots where the schedule may be non-smooth.
    fn knots(&self) -> Vec<f64> {
        match &self.kind {
            ScheduleKind::Tabulated(table) => table.xs.clone(),
            _ => Vec::new(),
        }
    }

    pub fn beta_at(&self, t: f64) -> InverseTemperature {
        InverseTemperature::from_temperature(self.eval(t)).expect("schedule temperatures are >= 0")
    }
}

pub fn temperature_at(schedule: &TemperatureSchedule, t: f64) -> Result<f64> {
    schedule.check_time(t)?;
    Ok(schedule.eval(t))
}

/// Piecewise-cubic Hermite interpolant with Fritsch-Butland tangents; never
/// overshoots the data between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter {
                what: "table",
                reason: "knot times must be strictly increasing".into(),
            });
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for k in 1..n - 1 {
            let (d0, d1) = (delta[k - 1], delta[k]);
            if d0 * d1 > 0.0 {
                let (h0, h1) = (h[k - 1], h[k]);
                slopes[k] = 3.0 * (h0 + h1) / ((2.0 * h1 + h0) / d0 + (h1 + 2.0 * h0) / d1);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// Equilibrium expectation value as a function of temperature, `T -> <O>_T`,
/// defined on `T >= 0` with `T = 0` the ground-state limit.
#[derive(Clone)]
pub struct EquilibriumCurve {
    label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for EquilibriumCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquilibriumCurve")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl EquilibriumCurve {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), move |_| value)
    }

    /// `T -> Tr(rho_E(T) O)` for an operator on the Hilbert space of `spec`.
    pub fn from_observable(label: impl Into<String>, spec: &Spectrum, op: &Operator) -> Result<Self> {
        if op.nrows() != spec.dim() || op.ncols() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: op.nrows(),
            });
        }
        let diagonal: Vec<f64> = spec
            .to_eigenbasis(op)
            .diagonal()
            .iter()
            .map(|z| z.re)
            .collect();
        let energies = spec.energies().to_vec();
        Ok(Self::new(label, move |temp| {
            let beta = InverseTemperature::from_temperature(temp.max(0.0)).expect("temperature >= 0");
            gibbs_weights(&energies, beta)
                .iter()
                .zip(&diagonal)
                .map(|(w, d)| w * d)
                .sum()
        }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, temperature: f64) -> f64 {
        (self.eval)(temperature)
    }
}

/// Breakpoints on `[0, t]` clustered where the kernel `e^{g (t' - t)}` varies.
fn kernel_breakpoints(schedule: &TemperatureSchedule, gamma0: f64, t: f64) -> Vec<f64> {
    let mut points = vec![0.0, t];
    let mut s = 0.25;
    while s <= 64.0 {
        let p = t - s / gamma0;
        if p > 0.0 && p < t {
            points.push(p);
        }
        s *= 2.0;
    }
    points.extend(schedule.knots().into_iter().filter(|&k| k > 0.0 && k < t));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

fn check_rate(gamma0: f64) -> Result<()> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::InvalidParameter {
            what: "gamma0",
            reason: format!("must be positive, got {gamma0}"),
        });
    }
    Ok(())
}

/// Eigenbasis populations of the exact quench state at time `t`.
pub fn quench_populations(
    energies: &[f64],
    schedule: &TemperatureSchedule,
    gamma0: f64,
    t: f64,
) -> Result<Vec<f64>> {
    check_rate(gamma0)?;
    schedule.check_time(t)?;
    let n = energies.len();
    let decay = (-gamma0 * t).exp();
    let initial = gibbs_weights(energies, schedule.beta_at(0.0));
    let memory = quadrature::integrate_vec(
        |s| {
            let k = gamma0 * (gamma0 * (s - t)).exp();
            gibbs_weights(energies, schedule.beta_at(s))
                .into_iter()
                .map(|w| k * w)
                .collect()
        },
        &kernel_breakpoints(schedule, gamma0, t),
        n,
        QUADRATURE_REL_TOL,
    )?;
    let mut pops: Vec<f64> = initial
        .iter()
        .zip(&memory)
        .map(|(w0, m)| decay * w0 + m)
        .collect();
    // each Gibbs weight vector sums to one, so the exact total is one
    let total: f64 = pops.iter().sum();
    pops.iter_mut().for_each(|p| *p /= total);
    Ok(pops)
}

/// Exact state at time `t` for a system prepared in equilibrium at `T(0)`.
pub fn quench_state(
    spec: &Spectrum,
    schedule: &TemperatureSchedule,
    gamma0: f64,
    t: f64,
) -> Result<DensityMatrix> {
    let pops = quench_populations(spec.energies(), schedule, gamma0, t)?;
    Ok(DensityMatrix::from_matrix_unchecked(linalg::hermitian_part(
        &spec.compose(&pops),
    )))
}

/// `e^{-g t} <O>_{T(0)} + g int_0^t e^{g (t' - t)} <O>_{T(t')} dt'`.
pub fn observable_value(
    curve: &EquilibriumCurve,
    schedule: &TemperatureSchedule,
    gamma0: f64,
    t: f64,
) -> Result<f64> {
    Ok(observable_value_parts(curve, schedule, gamma0, t)?.total())
}

/// The two terms of the observable formula, kept separate so the size of
/// the decaying initial-condition term can be inspected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableParts {
    pub initial: f64,
    pub memory: f64,
}

impl ObservableParts {
    pub fn total(&self) -> f64 {
        self.initial + self.memory
    }
}

pub fn observable_value_parts(
    curve: &EquilibriumCurve,
    schedule: &TemperatureSchedule,
    gamma0: f64,
    t: f64,
) -> Result<ObservableParts> {
    check_rate(gamma0)?;
    schedule.check_time(t)?;
    let initial = (-gamma0 * t).exp() * curve.eval(schedule.eval(0.0));
    let memory = quadrature::integrate(
        |s| gamma0 * (gamma0 * (s - t)).exp() * curve.eval(schedule.eval(s)),
        &kernel_breakpoints(schedule, gamma0, t),
        QUADRATURE_REL_TOL,
    )?;
    Ok(ObservableParts { initial, memory })
}
