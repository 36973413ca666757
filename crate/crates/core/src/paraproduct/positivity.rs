use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::random::derive_seed;
use crate::spectral::{random_field, FieldSpec, SpectralField};

use super::{CoefficientMatrix, Paraproduct, ParaproductConfig};

/// Seeded ensemble of vector fields `u = (u_1, .., u_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityEnsemble {
    pub size: usize,
    pub seed: u64,
    pub spec: FieldSpec,
}

impl PositivityEnsemble {
    /// Low-frequency weighted complex fields, amplitude `(1 + |xi|²)^{-1}`.
    pub fn new(size: usize, seed: u64) -> Self {
        Self { size, seed, spec: FieldSpec::band_limited(1.0, 2.0) }
    }

    /// Same protocol, independent draw.
    pub fn fresh(&self) -> Self {
        Self { seed: derive_seed(self.seed, 0x5053), ..self.clone() }
    }

    fn member<T: Real>(&self, a: &CoefficientMatrix<T>, i: usize) -> Vec<SpectralField<T>> {
        let d = a.dim();
        (0..d)
            .map(|j| random_field(a.grid(), &self.spec, self.seed, (i * d + j) as u64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityThreshold {
    pub m: u32,
    /// `m ↦ min_u Re<T^m_A u, u> / ||u||²` over the search ensemble.
    pub profile: Vec<(u32, f64)>,
    /// Same ratio on the fresh ensemble for `m, .., m + 3` (as far as the grid allows).
    pub out_of_sample: Vec<(u32, f64)>,
}

/// `min_u Re Σ_{jk} <T^m_{a_jk} u_k, u_j> / ||u||²` over the ensemble.
pub fn positivity_margin<T: Real>(a: &CoefficientMatrix<T>, m: u32, ensemble: &PositivityEnsemble) -> Result<T> {
    if ensemble.size == 0 {
        return Err(Error::Config("positivity ensemble is empty".into()));
    }
    let grid = a.grid();
    let d = a.dim();
    let cfg = ParaproductConfig::new(grid, m, T::lit(0.5))?;
    let ops: Vec<Paraproduct<T>> = a.entries_upper().iter().map(|e| Paraproduct::new(&cfg, e)).collect::<Result<_>>()?;
    let op = |j: usize, k: usize| {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        &ops[j * d - j * (j + 1) / 2 + k]
    };
    let ratios: Vec<T> = (0..ensemble.size)
        .into_par_iter()
        .map(|i| {
            let u = ensemble.member(a, i);
            let mut form = T::zero();
            for j in 0..d {
                for k in 0..d {
                    form = form + op(j, k).apply(&u[k]).inner(&u[j]).re;
                }
            }
            let norm2: T = u.iter().map(|f| f.l2_norm().powi(2)).sum();
            if norm2 == T::zero() {
                T::infinity()
            } else {
                form / norm2
            }
        })
        .collect();
    Ok(ratios.into_iter().fold(T::infinity(), T::min))
}

/// Smallest `m <= m_max` with `Re<T^m_A u, u> >= (λ0/2)||u||²` on the whole
/// ensemble, scanning upward from 0, then re-checked on a fresh draw.
pub fn find_positive_m<T: Real>(
    a: &CoefficientMatrix<T>,
    ensemble: &PositivityEnsemble,
    m_max: u32,
) -> Result<PositivityThreshold> {
    let cap = ParaproductConfig::max_shift(a.grid())
        .ok_or_else(|| Error::Config(format!("grid n = {} too small for any shift", a.grid().n())))?;
    let target = a.lambda0() / T::lit(2.0);
    let mut profile = Vec::new();
    for m in 0..=m_max.min(cap) {
        let r = positivity_margin(a, m, ensemble)?;
        profile.push((m, r.as_f64()));
        if r >= target {
            let fresh = ensemble.fresh();
            let out_of_sample = (m..=(m + 3).min(cap))
                .map(|k| positivity_margin(a, k, &fresh).map(|r| (k, r.as_f64())))
                .collect::<Result<_>>()?;
            return Ok(PositivityThreshold { m, profile, out_of_sample });
        }
    }
    Err(Error::ThresholdNotFound { m_max, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Cplx;
    use crate::spectral::TorusGrid;

    #[test]
    fn unit_coefficient_threshold_is_one() {
        let g = TorusGrid::<f64>::new(1, 64).unwrap();
        let a = CoefficientMatrix::identity(&g);
        let t = find_positive_m(&a, &PositivityEnsemble::new(16, 7), 3).unwrap();
        assert_eq!(t.m, 1);
        assert!(t.profile[0].1 < 0.5);
        assert!((t.profile[1].1 - 1.0).abs() < 1e-12);
        assert!(t.out_of_sample.iter().all(|(_, r)| (r - 1.0).abs() < 1e-12));
    }

    #[test]
    fn identity_matrix_matches_scalar() {
        let e = PositivityEnsemble::new(8, 11);
        let g1 = TorusGrid::<f64>::new(1, 32).unwrap();
        let g2 = TorusGrid::<f64>::new(2, 32).unwrap();
        let t1 = find_positive_m(&CoefficientMatrix::identity(&g1), &e, 2).unwrap();
        let t2 = find_positive_m(&CoefficientMatrix::identity(&g2), &e, 2).unwrap();
        assert_eq!(t1.m, t2.m);
    }

    #[test]
    fn not_found_carries_profile() {
        let g = TorusGrid::<f64>::new(1, 64).unwrap();
        let a = CoefficientMatrix::scalar(&SpectralField::constant(&g, Cplx::new(1.0, 0.0)), 1.0).unwrap();
        match find_positive_m(&a, &PositivityEnsemble::new(4, 1), 0) {
            Err(Error::ThresholdNotFound { m_max: 0, profile }) => assert_eq!(profile.len(), 1),
            other => panic!("{other:?}"),
        }
    }
}
