//! Littlewood-Paley operators `S_k`, `Δ_k` and the norms they characterize.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::cutoff::{block_symbol, low_pass_symbol, PLATEAU, SUPPORT};
use super::SpectralField;

/// `S_k u = chi(2^{-k}|D|) u`; the zero field for `k < 0`.
pub fn apply_s<T: Real>(u: &SpectralField<T>, k: i32) -> SpectralField<T> {
    if k < 0 {
        return SpectralField::zeros(u.grid());
    }
    u.multiplier(|_, r| low_pass_symbol(k, r))
}

/// `Δ_k u` (`Δ_0 = S_0`, `Δ_k = S_k - S_{k-1}`).
pub fn apply_delta<T: Real>(u: &SpectralField<T>, k: i32) -> SpectralField<T> {
    if k < 0 {
        return SpectralField::zeros(u.grid());
    }
    u.multiplier(|_, r| block_symbol(k, r))
}

/// Frequencies where `Δ_k` may be nonzero: `(1.1 * 2^{k-1}, 1.9 * 2^k)` for
/// `k >= 1`, `[0, 1.9)` for `k = 0`.
pub fn block_annulus(k: i32) -> (f64, f64) {
    if k == 0 {
        (0.0, SUPPORT)
    } else {
        (PLATEAU * 2f64.powi(k - 1), SUPPORT * 2f64.powi(k))
    }
}

/// Largest coefficient of `block` outside the open annulus of block `k`,
/// relative to the largest coefficient overall (0 for the zero field).
pub fn support_leak<T: Real>(block: &SpectralField<T>, k: i32) -> T {
    let (lo, hi) = block_annulus(k);
    let (lo, hi) = (T::lit(lo), T::lit(hi));
    let g = block.grid();
    let mut outside = T::zero();
    for (i, c) in block.coeffs().iter().enumerate() {
        let r = g.xi_norm(i);
        let inside = if k == 0 { r < hi } else { r > lo && r < hi };
        if !inside {
            outside = outside.max(c.norm());
        }
    }
    let scale = block.max_coeff();
    if scale == T::zero() {
        T::zero()
    } else {
        outside / scale
    }
}

/// The family `{Δ_k u}_{k=0..=k_max}` with energies `δ_k = 2^{ks} ||Δ_k u||_{L²}`.
#[derive(Debug, Clone)]
pub struct DyadicDecomposition<T: Real> {
    pub blocks: Vec<SpectralField<T>>,
    pub s_exponent: T,
    pub block_energies: Vec<T>,
}

impl<T: Real> DyadicDecomposition<T> {
    /// `Σ_k Δ_k u`.
    pub fn reconstruct(&self) -> SpectralField<T> {
        let mut it = self.blocks.iter();
        let first = it.next().expect("at least one block").clone();
        it.fold(first, |acc, b| acc.add(b))
    }

    /// `(Σ δ_k²)^{1/2}`.
    pub fn energy_norm(&self) -> T {
        self.block_energies.iter().map(|d| *d * *d).sum::<T>().sqrt()
    }

    /// CSV with columns `k,delta_k`.
    pub fn energies_csv(&self) -> String {
        let mut out = String::from("k,delta_k\n");
        for (k, d) in self.block_energies.iter().enumerate() {
            out.push_str(&format!("{k},{:e}\n", d.as_f64()));
        }
        out
    }
}

pub fn decompose<T: Real>(u: &SpectralField<T>, s: T) -> DyadicDecomposition<T> {
    let k_max = u.grid().k_max();
    let blocks: Vec<_> = (0..=k_max).map(|k| apply_delta(u, k)).collect();
    let block_energies = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| T::lit(2.0).powf(T::from_usize_lossy(k) * s) * b.l2_norm())
        .collect();
    DyadicDecomposition { blocks, s_exponent: s, block_energies }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// From the Fourier weights directly.
    Direct,
    /// From the Littlewood-Paley blocks.
    Lp,
}

/// `H^s` norm. `Direct`: `((2π)^dim Σ (1+|xi|²)^s |û|²)^{1/2}`;
/// `Lp`: `(Σ_k (2^{ks} ||Δ_k u||)²)^{1/2}`.
pub fn h_norm<T: Real>(u: &SpectralField<T>, s: T, method: NormMethod) -> T {
    match method {
        NormMethod::Direct => h_norm_sq(u, s).sqrt(),
        NormMethod::Lp => {
            // Per-block energies straight from the coefficients; same value as
            // `decompose(u, s).energy_norm()` without the inverse transforms.
            let g = u.grid();
            let two = T::lit(2.0);
            (0..=g.k_max())
                .map(|k| {
                    let e: T = u
                        .coeffs()
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let w = block_symbol(k, g.xi_norm(i));
                            w * w * c.norm_sqr()
                        })
                        .sum();
                    two.powf(T::from_i32(2 * k).expect("small") * s) * e * g.volume()
                })
                .sum::<T>()
                .sqrt()
        }
    }
}

/// Squared direct `H^s` norm.
pub fn h_norm_sq<T: Real>(u: &SpectralField<T>, s: T) -> T {
    let g = u.grid();
    let total: T = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = g.xi_norm(i);
            (T::one() + r * r).powf(s) * c.norm_sqr()
        })
        .sum();
    total * g.volume()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipNorm<T> {
    pub value: T,
    /// `2^k ||Δ_k a||_{L^∞}` for `k = 0..=k_max`.
    pub decay: Vec<T>,
}

fn check_real<T: Real>(a: &SpectralField<T>) -> Result<()> {
    let tol = T::lit(1e-12) * a.max_abs().max(T::one());
    if a.max_imag() > tol {
        return Err(Error::Domain(format!("field is not real (max |Im| = {})", a.max_imag())));
    }
    Ok(())
}

/// `max |∇a|` over the nodes.
pub fn max_gradient<T: Real>(a: &SpectralField<T>) -> T {
    let grads: Vec<_> = (0..a.grid().dim()).map(|j| a.derivative(j)).collect();
    (0..a.grid().len())
        .map(|i| grads.iter().map(|g| g.samples()[i].norm_sqr()).sum::<T>().sqrt())
        .fold(T::zero(), T::max)
}

/// `||a||_{Lip} = ||a||_∞ + ||∇a||_∞`. `Direct` uses the spectral gradient;
/// `Lp` replaces `||∇a||_∞` by `sup_k ||∇ S_k a||_∞`.
pub fn lip_norm<T: Real>(a: &SpectralField<T>, method: NormMethod) -> Result<LipNorm<T>> {
    check_real(a)?;
    let sup = a.max_abs();
    let k_max = a.grid().k_max();
    let grad = match method {
        NormMethod::Direct => max_gradient(a),
        NormMethod::Lp => (0..=k_max).map(|k| max_gradient(&apply_s(a, k))).fold(T::zero(), T::max),
    };
    let decay = (0..=k_max)
        .map(|k| T::lit(2f64.powi(k)) * apply_delta(a, k).max_abs())
        .collect();
    Ok(LipNorm { value: sup + grad, decay })
}

/// `||∂_{x_axis} block|| / ||block||` after certifying the block's Fourier
/// support lies in `|xi| < 1.9 * 2^nu`. The ratio is at most `2^{nu+1}`.
pub fn bernstein_check<T: Real>(block: &SpectralField<T>, nu: i32, axis: usize) -> Result<T> {
    let g = block.grid();
    let radius = T::lit(SUPPORT * 2f64.powi(nu));
    let tol = T::lit(1e-14) * block.max_coeff();
    for (i, c) in block.coeffs().iter().enumerate() {
        let r = g.xi_norm(i);
        if r >= radius && c.norm() > tol {
            return Err(Error::NotABlock { nu, xi: r.as_f64(), magnitude: c.norm().as_f64() });
        }
    }
    if axis >= g.dim() {
        return Err(Error::Domain(format!("axis {axis} out of range for dim {}", g.dim())));
    }
    let n = block.l2_norm();
    if n == T::zero() {
        return Ok(T::zero());
    }
    Ok(block.derivative(axis).l2_norm() / n)
}

/// `max_xi min |xi|` over the nonzero coefficients: the sharpest lower
/// frequency bound for `||∇u|| >= r ||u||`.
pub fn min_frequency<T: Real>(u: &SpectralField<T>) -> T {
    let g = u.grid();
    let tol = T::lit(1e-14) * u.max_coeff();
    u.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > tol)
        .map(|(i, _)| g.xi_norm(i))
        .fold(T::infinity(), T::min)
}
