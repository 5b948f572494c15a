//! Spinless fermions on an open chain in the occupation-number basis.
//!
//! Basis state `s` (an integer in `0..2^L`) has site `l` occupied when bit
//! `l - 1` is set, so site 1 is the least-significant bit. Jordan-Wigner
//! strings run over the sites with smaller index.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::Operator;
use crate::linalg::{c, CMatrix};

pub const MAX_CHAIN_LENGTH: usize = 10;

fn check_length(length: usize) -> Result<()> {
    if length == 0 || length > MAX_CHAIN_LENGTH {
        return Err(Error::OutOfRange {
            what: "chain length",
            value: length as f64,
            min: 1.0,
            max: MAX_CHAIN_LENGTH as f64,
        });
    }
    Ok(())
}

fn check_index(what: &'static str, index: usize, length: usize) -> Result<()> {
    if index == 0 || index > length {
        return Err(Error::OutOfRange {
            what,
            value: index as f64,
            min: 1.0,
            max: length as f64,
        });
    }
    Ok(())
}

/// Sign `(-1)^(occupied sites below bit)` of the Jordan-Wigner string.
#[inline]
fn jw_sign(state: usize, bit: usize) -> f64 {
    if (state & ((1 << bit) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Annihilation operator `c_site` (1-based site).
pub fn annihilation(length: usize, site: usize) -> Result<Operator> {
    check_length(length)?;
    check_index("site", site, length)?;
    let dim = 1 << length;
    let bit = site - 1;
    let mut m = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        if s & (1 << bit) != 0 {
            m[(s ^ (1 << bit), s)] = c(jw_sign(s, bit));
        }
    }
    Ok(m)
}

pub fn creation(length: usize, site: usize) -> Result<Operator> {
    Ok(annihilation(length, site)?.adjoint())
}

/// `c_to^dagger c_from`, assembled directly on basis states.
pub fn hopping(length: usize, to: usize, from: usize) -> Result<Operator> {
    check_length(length)?;
    check_index("site", to, length)?;
    check_index("site", from, length)?;
    let dim = 1 << length;
    let (a, b) = (to - 1, from - 1);
    let mut m = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        if s & (1 << b) == 0 {
            continue;
        }
        let mid = s ^ (1 << b);
        if mid & (1 << a) != 0 {
            continue;
        }
        let out = mid | (1 << a);
        m[(out, s)] += c(jw_sign(s, b) * jw_sign(mid, a));
    }
    Ok(m)
}

pub fn site_number(length: usize, site: usize) -> Result<Operator> {
    hopping(length, site, site)
}

pub fn total_number(length: usize) -> Result<Operator> {
    check_length(length)?;
    let dim = 1usize << length;
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            c(i.count_ones() as f64)
        } else {
            c(0.0)
        }
    }))
}

/// Nearest-neighbour hopping Hamiltonian with open boundaries,
/// `H = -t sum_l (c_{l+1}^dagger c_l + c_l^dagger c_{l+1})`.
pub fn build_fermion_chain(length: usize, t_hop: f64) -> Result<Operator> {
    check_length(length)?;
    let dim = 1 << length;
    let mut h = CMatrix::zeros(dim, dim);
    for l in 1..length {
        h -= hopping(length, l + 1, l)?.scale(t_hop);
        h -= hopping(length, l, l + 1)?.scale(t_hop);
    }
    Ok(h)
}

/// Standing-wave amplitudes `sqrt(2/(L+1)) sin(pi k n/(L+1))`, `n = 1..L`.
///
/// The `L + 1` normalization makes the mode transform orthogonal.
pub fn mode_amplitudes(length: usize, k: usize) -> Result<Vec<f64>> {
    check_index("mode k", k, length)?;
    let norm = (2.0 / (length as f64 + 1.0)).sqrt();
    Ok((1..=length)
        .map(|n| norm * (PI * (k * n) as f64 / (length as f64 + 1.0)).sin())
        .collect())
}

/// Mode annihilation operator `c_k = sum_n phi_k(n) c_n`.
pub fn mode_annihilation(length: usize, k: usize) -> Result<Operator> {
    check_length(length)?;
    let phi = mode_amplitudes(length, k)?;
    let dim = 1 << length;
    let mut m = CMatrix::zeros(dim, dim);
    for (n, amp) in phi.iter().enumerate() {
        m += annihilation(length, n + 1)?.scale(*amp);
    }
    Ok(m)
}

/// Mode occupation `n_k = c_k^dagger c_k`.
pub fn fermion_mode_number(length: usize, k: usize) -> Result<Operator> {
    check_length(length)?;
    let phi = mode_amplitudes(length, k)?;
    let dim = 1 << length;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..=length {
        for p in 1..=length {
            let amp = phi[n - 1] * phi[p - 1];
            if amp != 0.0 {
                m += hopping(length, n, p)?.scale(amp);
            }
        }
    }
    Ok(m)
}

/// `eps_k = -2 t cos(pi k/(L+1))`, `k = 1..L`.
pub fn single_particle_energies(length: usize, t_hop: f64) -> Vec<f64> {
    (1..=length)
        .map(|k| -2.0 * t_hop * (PI * k as f64 / (length as f64 + 1.0)).cos())
        .collect()
}

/// Fermi function `1/(exp(beta eps) + 1)` at zero chemical potential,
/// including the `beta = inf` step (value 1/2 at `eps = 0`).
pub fn fermi_function(eps: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        return if eps < 0.0 {
            1.0
        } else if eps > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let x = beta * eps;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}
