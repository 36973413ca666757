//! Bony's paraproduct `T_a` and the shifted variant `T^m_a`, with the
//! adjoint, the remainder `au - T^m_a u` and the commutator with `Δ_ν`.
//!
//! `T^m_a u = S_{m-1}a · S_{m+1}u + Σ_{k=m+2}^{k_max} S_{k-3}a · Δ_k u`.
//! Every product is dealiased, so the finite sum is the exact operator on
//! band-limited grid functions. `T^0_a` is Bony's `T_a`.

mod commutator;
mod matrix;
mod positivity;
mod probe;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::cutoff::{block_symbol, low_pass_symbol};
use crate::spectral::{SpectralField, TorusGrid};

pub use commutator::{
    commutator_annulus, commutator_head, commutator_term, locality_certificate, LocalityCertificate,
};
pub use matrix::CoefficientMatrix;
pub use positivity::{find_positive_m, positivity_margin, PositivityEnsemble, PositivityThreshold};
pub use probe::{
    measure, probe, resolution_stable, Coefficient, Inequality, Measurement, ProbeEnsemble, ProbeReport,
    ResolutionEntry, Verdict,
};

/// Shift `m` and Sobolev index `s` on a fixed grid.
#[derive(Debug, Clone)]
pub struct ParaproductConfig<T: Real> {
    m: u32,
    s: T,
    grid: TorusGrid<T>,
}

impl<T: Real> ParaproductConfig<T> {
    /// Requires `m + 4 <= k_max` and `0 < s < 1`.
    pub fn new(grid: &TorusGrid<T>, m: u32, s: T) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::Config(format!("Sobolev index s = {s} outside (0, 1)")));
        }
        if m as i64 + 4 > grid.k_max() as i64 {
            return Err(Error::Config(format!(
                "shift m = {m} needs m + 4 <= k_max = {} at n = {}",
                grid.k_max(),
                grid.n()
            )));
        }
        Ok(Self { m, s, grid: grid.clone() })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    /// Largest admissible shift on `grid`.
    pub fn max_shift(grid: &TorusGrid<T>) -> Option<u32> {
        u32::try_from(grid.k_max() - 4).ok()
    }

    fn check(&self, f: &SpectralField<T>) -> Result<()> {
        if *f.grid() == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs configured {:?}", f.grid(), self.grid)))
        }
    }
}

/// Frequency piece of `u` paired with a low-pass of `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece {
    Low(i32),
    Block(i32),
}

impl Piece {
    pub(crate) fn symbol<T: Real>(self, r: T) -> T {
        match self {
            Piece::Low(k) => low_pass_symbol(k, r),
            Piece::Block(k) => block_symbol(k, r),
        }
    }

    pub(crate) fn apply<T: Real>(self, u: &SpectralField<T>) -> SpectralField<T> {
        u.multiplier(|_, r| self.symbol(r))
    }
}

/// `(j, piece)` for every summand `S_j a · piece(u)` of `T^m_a`; summands
/// with `j < 0` vanish and are omitted.
pub(crate) fn terms(m: u32, k_max: i32) -> Vec<(i32, Piece)> {
    let m = m as i32;
    let mut out = Vec::new();
    if m >= 1 {
        out.push((m - 1, Piece::Low(m + 1)));
    }
    for k in (m + 2).max(3)..=k_max {
        out.push((k - 3, Piece::Block(k)));
    }
    out
}

/// `T^m_a` with the low-passes of `a` pre-sampled on the padded grid.
#[derive(Debug, Clone)]
pub struct Paraproduct<T: Real> {
    grid: TorusGrid<T>,
    m: u32,
    terms: Vec<(i32, Piece, Vec<Cplx<T>>)>,
}

impl<T: Real> Paraproduct<T> {
    pub fn new(cfg: &ParaproductConfig<T>, a: &SpectralField<T>) -> Result<Self> {
        cfg.check(a)?;
        Ok(Self::unchecked(a, cfg.m))
    }

    /// Bony's `T_a` (no lower bound on the grid size).
    pub fn bony(a: &SpectralField<T>) -> Self {
        Self::unchecked(a, 0)
    }

    fn unchecked(a: &SpectralField<T>, m: u32) -> Self {
        let grid = a.grid().clone();
        let terms = terms(m, grid.k_max())
            .into_par_iter()
            .map(|(j, p)| (j, p, crate::spectral::apply_s(a, j).padded_samples()))
            .collect();
        Self { grid, m, terms }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    /// `T^m_a u`.
    pub fn apply(&self, u: &SpectralField<T>) -> SpectralField<T> {
        assert!(*u.grid() == self.grid, "fields live on different grids");
        let parts: Vec<Vec<Cplx<T>>> = self
            .terms
            .par_iter()
            .map(|(_, p, low)| {
                let mut b = p.apply(u).padded_samples();
                b.iter_mut().zip(low).for_each(|(x, y)| *x = *x * *y);
                b
            })
            .collect();
        // Sequential accumulation keeps the result bitwise reproducible.
        let mut acc = vec![Cplx::new(T::zero(), T::zero()); self.grid.padded_len()];
        for part in &parts {
            acc.iter_mut().zip(part).for_each(|(x, y)| *x = *x + *y);
        }
        SpectralField::from_padded_samples(&self.grid, acc)
    }

    /// `(T^m_a)^* v = Σ piece(S_j a · v)`.
    pub fn apply_adjoint(&self, v: &SpectralField<T>) -> SpectralField<T> {
        assert!(*v.grid() == self.grid, "fields live on different grids");
        let vp = v.padded_samples();
        let parts: Vec<SpectralField<T>> = self
            .terms
            .par_iter()
            .map(|(_, p, low)| {
                let prod = low.iter().zip(&vp).map(|(x, y)| *x * *y).collect();
                p.apply(&SpectralField::from_padded_samples(&self.grid, prod))
            })
            .collect();
        parts.iter().fold(SpectralField::zeros(&self.grid), |acc, f| acc.add(f))
    }

    /// The individual summands `S_j a · piece(u)`, labelled by the piece.
    pub fn summands(&self, u: &SpectralField<T>) -> Vec<(i32, SpectralField<T>)> {
        self.terms
            .iter()
            .map(|(_, p, low)| {
                let mut b = p.apply(u).padded_samples();
                b.iter_mut().zip(low).for_each(|(x, y)| *x = *x * *y);
                let k = match p {
                    Piece::Low(k) | Piece::Block(k) => *k,
                };
                (k, SpectralField::from_padded_samples(&self.grid, b))
            })
            .collect()
    }
}

/// Bony's paraproduct `T_a u = Σ_{k=3}^{k_max} S_{k-3}a · Δ_k u`.
pub fn bony_t<T: Real>(a: &SpectralField<T>, u: &SpectralField<T>) -> Result<SpectralField<T>> {
    a.ensure_same_grid(u)?;
    Ok(Paraproduct::bony(a).apply(u))
}

/// `T^m_a u`.
pub fn modified_t<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    u: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    cfg.check(u)?;
    Ok(Paraproduct::new(cfg, a)?.apply(u))
}

/// `(T^m_a)^* v`.
pub fn adjoint<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    v: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    cfg.check(v)?;
    Ok(Paraproduct::new(cfg, a)?.apply_adjoint(v))
}

/// `au - T^m_a u`.
pub fn remainder<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    u: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    cfg.check(u)?;
    Ok(a.product(u).sub(&Paraproduct::new(cfg, a)?.apply(u)))
}

/// `(T^m_a - (T^m_a)^*) ∂_{x_j} u`.
pub fn adjoint_defect<T: Real>(
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    u: &SpectralField<T>,
    j: usize,
) -> Result<SpectralField<T>> {
    cfg.check(u)?;
    axis_ok(cfg.grid(), j)?;
    let op = Paraproduct::new(cfg, a)?;
    let du = u.derivative(j);
    Ok(op.apply(&du).sub(&op.apply_adjoint(&du)))
}

pub(crate) fn axis_ok<T: Real>(grid: &TorusGrid<T>, j: usize) -> Result<()> {
    if j < grid.dim() {
        Ok(())
    } else {
        Err(Error::Domain(format!("axis {j} out of range for dim {}", grid.dim())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{apply_s, random_field, FieldSpec};

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(1, n).unwrap()
    }

    #[test]
    fn config_bounds() {
        let g = grid(64); // k_max = 7
        assert!(ParaproductConfig::new(&g, 3, 0.5).is_ok());
        assert!(matches!(ParaproductConfig::new(&g, 4, 0.5), Err(Error::Config(_))));
        assert!(ParaproductConfig::new(&g, 1, 1.0).is_err());
        assert!(ParaproductConfig::new(&g, 1, 0.0).is_err());
        assert_eq!(ParaproductConfig::max_shift(&g), Some(3));
    }

    #[test]
    fn term_layout() {
        assert_eq!(terms(0, 5), vec![(0, Piece::Block(3)), (1, Piece::Block(4)), (2, Piece::Block(5))]);
        assert_eq!(terms(2, 5), vec![(1, Piece::Low(3)), (1, Piece::Block(4)), (2, Piece::Block(5))]);
    }

    #[test]
    fn constant_bony_is_high_pass() {
        let g = grid(128);
        let u = random_field(&g, &FieldSpec::white_noise(), 3, 0);
        let c = 1.7;
        let a = SpectralField::constant(&g, Cplx::new(c, 0.0));
        let t = bony_t(&a, &u).unwrap();
        let expect = u.sub(&apply_s(&u, 2)).scale(c);
        assert!(t.relative_coeff_distance(&expect) < 1e-14);
    }

    #[test]
    fn constant_modified_is_multiplication() {
        let g = grid(128);
        let u = random_field(&g, &FieldSpec::white_noise(), 4, 0);
        let a = SpectralField::constant(&g, Cplx::new(-0.6, 0.0));
        for m in 1..=ParaproductConfig::max_shift(&g).unwrap() {
            let cfg = ParaproductConfig::new(&g, m, 0.5).unwrap();
            let t = modified_t(&cfg, &a, &u).unwrap();
            assert!(t.relative_coeff_distance(&u.scale(-0.6)) < 1e-14, "m = {m}");
            assert!(remainder(&cfg, &a, &u).unwrap().max_coeff() < 1e-14);
            assert!(adjoint_defect(&cfg, &a, &u, 0).unwrap().max_coeff() < 1e-12);
        }
    }

    #[test]
    fn shift_zero_is_bony() {
        let g = grid(256);
        let a = random_field(&g, &FieldSpec::band_limited(0.5, 1.0).real(), 1, 0);
        let u = random_field(&g, &FieldSpec::white_noise(), 1, 1);
        let cfg = ParaproductConfig::new(&g, 0, 0.5).unwrap();
        let t0 = modified_t(&cfg, &a, &u).unwrap();
        assert!(t0.relative_coeff_distance(&bony_t(&a, &u).unwrap()) <= 1e-14);
    }

    #[test]
    fn sine_against_single_mode() {
        let g = grid(256);
        let a = SpectralField::from_real_fn(&g, |x| x[0].sin());
        let u = SpectralField::mode(&g, [64, 0]).unwrap();
        let t = bony_t(&a, &u).unwrap();
        // Direct convolution: sin x e^{i64x} = (e^{i65x} - e^{i63x}) / 2i.
        let scale = t.max_coeff();
        for (i, c) in t.coeffs().iter().enumerate() {
            let xi = g.xi(i)[0];
            if xi == 63 || xi == 65 {
                assert!((c.norm() - 0.5).abs() < 1e-14);
            } else {
                assert!(c.norm() <= 1e-14 * scale, "leak at {xi}");
            }
        }
    }

    #[test]
    fn adjoint_identity() {
        let g = TorusGrid::<f64>::new(2, 32).unwrap();
        let a = random_field(&g, &FieldSpec::band_limited(0.6, 1.0).real(), 9, 0);
        let u = random_field(&g, &FieldSpec::white_noise(), 9, 1);
        let v = random_field(&g, &FieldSpec::white_noise(), 9, 2);
        for m in 0..=ParaproductConfig::max_shift(&g).unwrap() {
            let op = Paraproduct::new(&ParaproductConfig::new(&g, m, 0.5).unwrap(), &a).unwrap();
            let lhs = op.apply(&u).inner(&v);
            let rhs = u.inner(&op.apply_adjoint(&v));
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "m = {m}");
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = SpectralField::constant(&grid(64), Cplx::new(1.0, 0.0));
        let u = SpectralField::zeros(&grid(128));
        assert!(matches!(bony_t(&a, &u), Err(Error::GridMismatch(_))));
        let cfg = ParaproductConfig::new(&grid(128), 1, 0.5).unwrap();
        assert!(modified_t(&cfg, &a, &u).is_err());
    }
}
