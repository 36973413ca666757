//! Space-time fields, time mollification of coefficients, the backward
//! parabolic operator and the Carleman-inequality probes built on them.

mod ledger;
mod mollify;
mod operator;
mod probe;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::cutoff::{chi, SUPPORT};
use crate::spectral::{SpectralField, TorusGrid};

pub use ledger::{proof_ledger_probe, LedgerRow, ProofLedger};
pub use mollify::{mollification_constants, mollify_time, MollificationConstants, MollifierKernel};
pub use operator::{apply_l, apply_p_para, CoefficientSchedule, Recipe};
pub use probe::{
    carleman_sides, gamma_sweep, log_spaced, random_ensemble, single_mode_ensemble, CarlemanProbeConfig,
    CarlemanSides, GammaSweep, SweepRow,
};

/// Minimum number of time samples.
pub const MIN_SAMPLES: usize = 64;

/// `M` uniform samples `t_i = i dt` of `[0, T]`, `dt = T / (M - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    samples: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, samples: usize) -> Result<Self> {
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::Config(format!("time horizon {horizon} must be positive")));
        }
        if samples < MIN_SAMPLES {
            return Err(Error::Config(format!("{samples} time samples, need at least {MIN_SAMPLES}")));
        }
        Ok(Self { horizon, samples })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.samples - 1)
    }

    pub fn time(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.samples).map(|i| self.time(i))
    }

    /// Trapezoid weights on the full grid.
    pub fn trapezoid(&self, i: usize) -> T {
        let dt = self.dt();
        if i == 0 || i + 1 == self.samples {
            dt / T::lit(2.0)
        } else {
            dt
        }
    }
}

/// One spatial field per time sample, all on one torus grid.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<T: Real> {
    time: TimeGrid<T>,
    slices: Vec<SpectralField<T>>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(time: TimeGrid<T>, slices: Vec<SpectralField<T>>) -> Result<Self> {
        if slices.len() != time.len() {
            return Err(Error::GridMismatch(format!("{} slices for {} time samples", slices.len(), time.len())));
        }
        for s in &slices[1..] {
            slices[0].ensure_same_grid(s)?;
        }
        Ok(Self { time, slices })
    }

    pub fn zeros(time: TimeGrid<T>, grid: &TorusGrid<T>) -> Self {
        Self { time, slices: vec![SpectralField::zeros(grid); time.len()] }
    }

    /// `g(t) f(x)`.
    pub fn separable(time: TimeGrid<T>, g: impl Fn(T) -> T, f: &SpectralField<T>) -> Self {
        let slices = time.times().map(|t| f.scale(g(t))).collect();
        Self { time, slices }
    }

    pub fn from_fn(time: TimeGrid<T>, grid: &TorusGrid<T>, f: impl Fn(T, [T; 2]) -> Cplx<T>) -> Self {
        let slices = time.times().map(|t| SpectralField::from_fn(grid, |x| f(t, x))).collect();
        Self { time, slices }
    }

    pub fn time_grid(&self) -> &TimeGrid<T> {
        &self.time
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.slices[0].grid()
    }

    pub fn slices(&self) -> &[SpectralField<T>] {
        &self.slices
    }

    pub fn slice(&self, i: usize) -> &SpectralField<T> {
        &self.slices[i]
    }

    pub fn map(&self, f: impl Fn(&SpectralField<T>) -> SpectralField<T>) -> Self {
        Self { time: self.time, slices: self.slices.iter().map(f).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(&SpectralField<T>, &SpectralField<T>) -> SpectralField<T>) -> Self {
        assert_eq!(self.slices.len(), other.slices.len(), "time grids differ");
        Self { time: self.time, slices: self.slices.iter().zip(&other.slices).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a.sub(b))
    }

    pub fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.time != other.time {
            return Err(Error::GridMismatch(format!("time grids {:?} vs {:?}", self.time, other.time)));
        }
        self.slices[0].ensure_same_grid(&other.slices[0])
    }

    /// `∂_t` by centred differences, second-order one-sided at both ends.
    pub fn time_derivative(&self) -> Self {
        let n = self.slices.len();
        let g = self.grid().clone();
        let h = (T::lit(2.0) * self.time.dt()).recip();
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        let s = &self.slices;
        let slices = (0..n)
            .map(|i| {
                let terms: Vec<(T, &SpectralField<T>)> = if i == 0 {
                    vec![(-three * h, &s[0]), (four * h, &s[1]), (-h, &s[2])]
                } else if i + 1 == n {
                    vec![(three * h, &s[n - 1]), (-four * h, &s[n - 2]), (h, &s[n - 3])]
                } else {
                    vec![(h, &s[i + 1]), (-h, &s[i - 1])]
                };
                SpectralField::linear_combination(&g, &terms)
            })
            .collect();
        Self { time: self.time, slices }
    }

    /// `max_x |f(t_i, x)|` per sample.
    pub fn sup_per_slice(&self) -> Vec<T> {
        self.slices.iter().map(|s| s.max_abs()).collect()
    }
}

/// Smooth bump supported in `(T/8, 3T/8)`: `chi` rescaled so its support
/// edge `1.9` lands on `t = T/4 ± T/8`.
pub fn bump<T: Real>(t: T, horizon: T) -> T {
    let centre = horizon / T::lit(4.0);
    let half = horizon / T::lit(8.0);
    chi((t - centre) / half * T::lit(SUPPORT))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_layout() {
        let tg = TimeGrid::new(2.0f64, 65).unwrap();
        assert_eq!(tg.dt(), 2.0 / 64.0);
        assert_eq!(tg.time(64), 2.0);
        let total: f64 = (0..65).map(|i| tg.trapezoid(i)).sum();
        assert!((total - 2.0).abs() < 1e-15);
        assert!(TimeGrid::new(1.0f64, 63).is_err());
        assert!(TimeGrid::new(0.0f64, 100).is_err());
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let tg = TimeGrid::new(1.0f64, 64).unwrap();
        let g = TorusGrid::new(1, 8).unwrap();
        let f = SpectralField::from_real_fn(&g, |x: [f64; 2]| x[0].cos());
        let u = SpaceTimeField::separable(tg, |t| 3.0 * t * t - t + 2.0, &f);
        let du = u.time_derivative();
        for (i, t) in tg.times().enumerate() {
            let expect = f.scale(6.0 * t - 1.0);
            assert!(du.slice(i).sub(&expect).max_abs() < 1e-11, "sample {i}");
        }
    }

    #[test]
    fn bump_support() {
        let t = 1.0f64;
        assert_eq!(bump(0.125, t), 0.0);
        assert_eq!(bump(0.375, t), 0.0);
        assert_eq!(bump(0.25, t), 1.0);
        assert!(bump(0.2, t) > 0.0);
        assert_eq!(bump(0.5, t), 0.0);
    }
}
