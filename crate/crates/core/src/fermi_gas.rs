//! Ideal 3D Fermi gas at fixed density, in units of the Fermi energy.
//!
//! The density of states per particle is `g(e) = (3/2) sqrt(e)`, so the
//! ground state fills `[0, 1]` and has energy `3/5`. Both the density
//! constraint and the residual energy `E(T) - E(0)` are written as integrals
//! of `f(e) - theta(1 - e)`, which is localized around the Fermi surface;
//! this avoids subtracting two nearly equal totals at low temperature.

use crate::error::{Error, Result};
use crate::quadrature;

const REL_TOL: f64 = 1e-12;
/// Density tolerance of the chemical-potential bisection.
pub const DENSITY_TOL: f64 = 1e-12;
/// Below this temperature the leading Sommerfeld term is used directly; its
/// relative error is of order `T^2`.
pub const SOMMERFELD_BELOW: f64 = 1e-6;
/// Fermi tails are cut off this many `T` away from the chemical potential.
const TAIL_WIDTH: f64 = 45.0;

/// `1/(e^x + 1)` without overflow.
fn logistic_tail(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `int g(e) h(e) de` over `[lo, hi]` via `e = u^2`, which removes the
/// square-root endpoint behaviour of the density of states.
fn dos_integral<F>(h: F, energy_breaks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let u_breaks: Vec<f64> = energy_breaks.iter().map(|e| e.max(0.0).sqrt()).collect();
    quadrature::integrate(|u| 3.0 * u * u * h(u * u), &u_breaks, REL_TOL)
}

fn breaks(lo: f64, hi: f64, inner: &[f64]) -> Vec<f64> {
    let mut v = vec![lo, hi];
    v.extend(inner.iter().copied().filter(|&x| x > lo && x < hi));
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `(int g (f - theta), int (e - 1) g (f - theta))` at chemical potential `mu`.
///
/// Near the Fermi surface the integrals run over `x = (e - 1)/T`, so the
/// occupation argument `x + (1 - mu)/T` keeps full precision at low `T`.
fn deviations(mu: f64, temperature: f64) -> Result<(f64, f64)> {
    let t = temperature;
    let shift = (1.0 - mu) / t;
    let g = |x: f64| 1.5 * (1.0 + t * x).max(0.0).sqrt();
    // particles above the Fermi energy
    let x_top = (mu.max(1.0) - 1.0) / t + TAIL_WIDTH;
    let particle_breaks = breaks(0.0, x_top, &[-shift]);
    let particle = |x: f64| logistic_tail(x + shift);
    let mut density = t * quadrature::integrate(|x| g(x) * particle(x), &particle_breaks, REL_TOL)?;
    let mut energy = t * t * quadrature::integrate(|x| x * g(x) * particle(x), &particle_breaks, REL_TOL)?;

    // holes below it: 1 - f = 1/(e^{(mu - e)/T} + 1)
    let hole_lo = mu - TAIL_WIDTH * t;
    if hole_lo > 0.0 {
        let x_lo = (hole_lo.min(1.0) - 1.0) / t;
        let hole_breaks = breaks(x_lo, 0.0, &[-shift]);
        let hole = |x: f64| logistic_tail(-shift - x);
        density -= t * quadrature::integrate(|x| g(x) * hole(x), &hole_breaks, REL_TOL)?;
        energy -= t * t * quadrature::integrate(|x| x * g(x) * hole(x), &hole_breaks, REL_TOL)?;
    } else {
        // the hole region reaches the band bottom; integrate in e = u^2
        let hole_breaks = breaks(0.0, 1.0, &[mu]);
        let hole = |e: f64| logistic_tail((mu - e) / t);
        density -= dos_integral(hole, &hole_breaks)?;
        energy += dos_integral(|e| (1.0 - e) * hole(e), &hole_breaks)?;
    }
    Ok((density, energy))
}

/// Chemical potential at temperature `T > 0` by bisection on the density
/// deviation (monotone increasing in `mu`).
pub fn chemical_potential(temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidParameter {
            what: "temperature",
            reason: format!("must be positive and finite, got {temperature}"),
        });
    }
    let density_at = |mu: f64| deviations(mu, temperature).map(|d| d.0);

    let mut hi = 1.0;
    let mut step = temperature * temperature + temperature * 1e-3;
    let mut lo = 1.0 - step;
    while density_at(lo)? > 0.0 {
        hi = lo;
        step *= 2.0;
        lo = 1.0 - step;
        if step > 1e6 * (1.0 + temperature) {
            return Err(Error::InvalidParameter {
                what: "temperature",
                reason: "chemical potential could not be bracketed".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = density_at(mid)?;
        if d.abs() <= DENSITY_TOL || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if d > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `E(T) - E(0)` per particle, in units of the Fermi energy.
pub fn residual_energy(temperature: f64) -> Result<f64> {
    if temperature == 0.0 {
        return Ok(0.0);
    }
    if temperature < SOMMERFELD_BELOW {
        return Ok(sommerfeld_residual_energy(temperature));
    }
    let mu = chemical_potential(temperature)?;
    Ok(deviations(mu, temperature)?.1)
}

/// Leading low-temperature term `(pi^2/4) T^2`.
pub fn sommerfeld_residual_energy(temperature: f64) -> f64 {
    std::f64::consts::PI.powi(2) / 4.0 * temperature * temperature
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct totals `N(mu)` and `E(mu)` over the whole band, with no
    /// Fermi-surface rewriting.
    fn totals(mu: f64, t: f64) -> (f64, f64) {
        let top = mu.max(1.0) + 60.0 * t;
        let n = quadrature::integrate(
            |e| 1.5 * e.sqrt() * logistic_tail((e - mu) / t),
            &[0.0, mu.clamp(0.0, top), top],
            1e-13,
        )
        .unwrap();
        let en = quadrature::integrate(
            |e| 1.5 * e.powf(1.5) * logistic_tail((e - mu) / t),
            &[0.0, mu.clamp(0.0, top), top],
            1e-13,
        )
        .unwrap();
        (n, en)
    }

    fn oracle_residual(t: f64) -> f64 {
        let (mut lo, mut hi) = (-20.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if totals(mid, t).0 > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        totals(0.5 * (lo + hi), t).1 - 0.6
    }

    #[test]
    fn zero_temperature_is_zero() {
        assert_eq!(residual_energy(0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_direct_totals_at_moderate_temperature() {
        for t in [0.05, 0.2, 1.0] {
            let a = residual_energy(t).unwrap();
            let b = oracle_residual(t);
            assert!((a - b).abs() < 1e-9 * b.abs().max(1e-3), "T = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn sommerfeld_regime() {
        for t in [1e-3, 1e-4, 2e-6] {
            let a = residual_energy(t).unwrap();
            let s = sommerfeld_residual_energy(t);
            // next Sommerfeld correction is relatively ~ (3 pi^2/20) T^2
            assert!(((a - s) / s).abs() < 2.0 * t * t + 1e-9, "T = {t}");
        }
        let t = 0.01;
        let mu = chemical_potential(t).unwrap();
        assert!((mu - (1.0 - PI * PI * t * t / 12.0)).abs() < 1e-7);
    }

    #[test]
    fn classical_limit() {
        let t = 200.0;
        let classical = 1.5 * t - 0.6;
        let a = residual_energy(t).unwrap();
        assert!(((a - classical) / classical).abs() < 1e-3);
    }

    #[test]
    fn monotone_in_temperature() {
        let mut prev = 0.0;
        for i in 1..=30 {
            let t = 0.05 * i as f64;
            let e = residual_energy(t).unwrap();
            assert!(e > prev);
            prev = e;
        }
    }
}
