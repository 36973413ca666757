use serde::Serialize;

use crate::error::Result;
use crate::scalar::Real;
use crate::spectral::{apply_delta, apply_s, SpectralField};

use super::{axis_ok, Paraproduct, ParaproductConfig, Piece};

/// `[Δ_ν, T^m_a] w = Δ_ν(T^m_a w) - T^m_a(Δ_ν w)`.
pub(crate) fn commutator_with<T: Real>(op: &Paraproduct<T>, w: &SpectralField<T>, nu: i32) -> SpectralField<T> {
    apply_delta(&op.apply(w), nu).sub(&op.apply(&apply_delta(w, nu)))
}

/// `∂_{x_j}([Δ_ν, T^m_a] ∂_{x_h} u)`.
pub fn commutator_term<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    u: &SpectralField<T>,
    nu: i32,
    j: usize,
    h: usize,
) -> Result<SpectralField<T>> {
    cfg.check(u)?;
    axis_ok(cfg.grid(), j)?;
    axis_ok(cfg.grid(), h)?;
    let op = Paraproduct::new(cfg, a)?;
    Ok(commutator_with(&op, &u.derivative(h), nu).derivative(j))
}

/// `(Δ_ν(S_i a · P w), S_i a · P Δ_ν w)` for the summand `S_i a · P`.
fn split<T: Real>(a: &SpectralField<T>, w: &SpectralField<T>, nu: i32, i: i32, p: Piece) -> [SpectralField<T>; 3] {
    let low = apply_s(a, i);
    let product = low.product(&p.apply(w));
    let outer = apply_delta(&product, nu);
    let inner = low.product(&p.apply(&apply_delta(w, nu)));
    [product, outer, inner]
}

fn relative<T: Real>(parts: [SpectralField<T>; 3]) -> T {
    let [product, outer, inner] = parts;
    let d = outer.sub(&inner).max_coeff();
    let scale = product.max_coeff();
    if scale == T::zero() {
        d
    } else {
        d / scale
    }
}

/// Head part `[Δ_ν, S_{m-1}a ·] S_{m+1} w` of the commutator (zero for `m = 0`).
pub fn commutator_head<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    w: &SpectralField<T>,
    nu: i32,
) -> Result<SpectralField<T>> {
    cfg.check(w)?;
    let m = cfg.m() as i32;
    let [_, outer, inner] = split(a, w, nu, m - 1, Piece::Low(m + 1));
    Ok(outer.sub(&inner))
}

/// Annulus part `Δ_ν(S_{k-3}a · Δ_k w) - S_{k-3}a · Δ_k Δ_ν w`.
pub fn commutator_annulus<T: Real>(a: &SpectralField<T>, w: &SpectralField<T>, nu: i32, k: i32) -> SpectralField<T> {
    let [_, outer, inner] = split(a, w, nu, k - 3, Piece::Block(k));
    outer.sub(&inner)
}

/// Residuals of the commutator parts that vanish by Fourier support, each
/// relative to the largest coefficient of the uncommuted product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityCertificate {
    pub nu: i32,
    /// Head residual when `ν >= m + 4`.
    pub head: Option<f64>,
    /// `(k, residual)` for every summand with `|k - ν| >= 4`.
    pub annulus: Vec<(i32, f64)>,
}

impl LocalityCertificate {
    pub fn max_residual(&self) -> f64 {
        self.annulus.iter().map(|(_, r)| *r).chain(self.head).fold(0.0, f64::max)
    }
}

pub fn locality_certificate<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    w: &SpectralField<T>,
    nu: i32,
) -> Result<LocalityCertificate> {
    cfg.check(w)?;
    let m = cfg.m() as i32;
    let head = (m >= 1 && nu >= m + 4).then(|| relative(split(a, w, nu, m - 1, Piece::Low(m + 1))).as_f64());
    let annulus = ((m + 2).max(3)..=cfg.grid().k_max())
        .filter(|k| (k - nu).abs() >= 4)
        .map(|k| (k, relative(split(a, w, nu, k - 3, Piece::Block(k))).as_f64()))
        .collect();
    Ok(LocalityCertificate { nu, head, annulus })
}
