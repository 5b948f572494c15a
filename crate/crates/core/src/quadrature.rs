//! Globally adaptive Gauss-Legendre quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 10;
const MAX_PANELS: usize = 20_000;

fn nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(ORDER))
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn rule<F>(f: &F, a: f64, b: f64, dim: usize) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    for &(x, w) in nodes() {
        let v = f(mid + half * x);
        for (s, y) in acc.iter_mut().zip(v) {
            *s += w * half * y;
        }
    }
    acc
}

struct Panel {
    a: f64,
    b: f64,
    estimate: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64, whole: Vec<f64>, dim: usize) -> Self {
        let m = 0.5 * (a + b);
        let left = rule(f, a, m, dim);
        let right = rule(f, m, b, dim);
        let estimate: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let error = estimate
            .iter()
            .zip(&whole)
            .map(|(e, w)| (e - w).abs())
            .fold(0.0, f64::max);
        Self {
            a,
            b,
            estimate,
            left,
            right,
            error,
        }
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over the span of `breakpoints` (ascending, at least two),
/// refining the worst panel until the summed error estimate is below
/// `rel_tol` times the largest component of the result.
pub fn integrate_vec<F>(f: F, breakpoints: &[f64], dim: usize, rel_tol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64>,
{
    let a = breakpoints[0];
    let b = breakpoints[breakpoints.len() - 1];
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut heap = BinaryHeap::new();
    for w in breakpoints.windows(2) {
        if w[1] > w[0] {
            let whole = rule(&f, w[0], w[1], dim);
            heap.push(Panel::new(&f, w[0], w[1], whole, dim));
        }
    }
    loop {
        let mut total = vec![0.0; dim];
        let mut error = 0.0;
        for p in heap.iter() {
            for (t, e) in total.iter_mut().zip(&p.estimate) {
                *t += e;
            }
            error += p.error;
        }
        let scale = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !scale.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature {
                a,
                b,
                error,
                panels: heap.len(),
            });
        }
        if error <= rel_tol * scale || error <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                a,
                b,
                error,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::Quadrature {
                a,
                b,
                error,
                panels: heap.len() + 1,
            });
        }
        heap.push(Panel::new(&f, worst.a, m, worst.left, dim));
        heap.push(Panel::new(&f, m, worst.b, worst.right, dim));
    }
}

pub fn integrate<F>(f: F, breakpoints: &[f64], rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    Ok(integrate_vec(|x| vec![f(x)], breakpoints, 1, rel_tol)?[0])
}
