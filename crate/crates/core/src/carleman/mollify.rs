use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::Modulus;
use crate::quadrature::adaptive_simpson;
use crate::scalar::{Cplx, Real};
use crate::spectral::{SpectralField, TorusGrid};

use super::{SpaceTimeField, TimeGrid};

/// Smallest admissible `ε / dt`.
pub const MIN_RESOLUTION: f64 = 4.0;

/// `(1/ε) ρ(t/ε)` with `ρ(s) = c₀ exp(-1/(1 - 4s²))` on `|s| < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierKernel<T> {
    epsilon: T,
    c0: T,
}

fn profile<T: Real>(s: T) -> T {
    let q = T::one() - T::lit(4.0) * s * s;
    if q > T::zero() {
        (-q.recip()).exp()
    } else {
        T::zero()
    }
}

impl<T: Real> MollifierKernel<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon <= T::lit(0.5)) {
            return Err(Error::Config(format!("mollification width {epsilon} outside (0, 1/2]")));
        }
        let half = T::lit(0.5);
        let mass = adaptive_simpson(&profile::<T>, -half, half, T::lit(1e-15));
        Ok(Self { epsilon, c0: mass.recip() })
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// `ρ(s)`.
    pub fn rho(&self, s: T) -> T {
        self.c0 * profile(s)
    }

    /// Discrete weights `w_j`, `j = -J..=J`, for step `dt`; they are the
    /// trapezoid weights `dt/ε ρ(j dt/ε)` rescaled to sum to one.
    pub fn weights(&self, dt: T) -> Result<Vec<T>> {
        if self.epsilon / dt < T::lit(MIN_RESOLUTION) {
            return Err(Error::Config(format!(
                "mollification width {} is under {MIN_RESOLUTION} time steps of {dt}",
                self.epsilon
            )));
        }
        let half = (self.epsilon / (T::lit(2.0) * dt)).floor().to_i64().expect("finite width") as i64;
        let raw: Vec<T> = (-half..=half)
            .map(|j| self.rho(T::from_i64(j).expect("small") * dt / self.epsilon) * dt / self.epsilon)
            .collect();
        let total: T = raw.iter().copied().sum();
        Ok(raw.into_iter().map(|w| w / total).collect())
    }
}

/// `a_ε(t) = ∫ a(s) (1/ε) ρ((t - s)/ε) ds`, with `a` continued by its end
/// values outside `[0, T]`.
pub fn mollify_time<T: Real>(a: &SpaceTimeField<T>, kernel: &MollifierKernel<T>) -> Result<SpaceTimeField<T>> {
    let w = kernel.weights(a.time_grid().dt())?;
    let half = (w.len() / 2) as i64;
    let last = a.time_grid().len() as i64 - 1;
    let g = a.grid().clone();
    let slices = (0..=last)
        .map(|i| {
            let terms: Vec<(T, &SpectralField<T>)> = w
                .iter()
                .enumerate()
                .map(|(j, wj)| (*wj, a.slice((i + j as i64 - half).clamp(0, last) as usize)))
                .collect();
            SpectralField::linear_combination(&g, &terms)
        })
        .collect();
    SpaceTimeField::new(*a.time_grid(), slices)
}

/// Measured constants of `sup|a_ε - a| <= C μ(ε)` and
/// `sup|∂_t a_ε| <= C μ(ε)/ε` at `ε = 2^{-2ν}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollificationConstants {
    pub nu: i32,
    pub epsilon: f64,
    pub mu_eps: f64,
    pub sup_diff: f64,
    pub sup_derivative: f64,
    /// `sup|a_ε - a| / μ(ε)`.
    pub c_diff: f64,
    /// `sup|∂_t a_ε| ε / μ(ε)`.
    pub c_derivative: f64,
}

/// Runs the two mollification estimates for a time profile `a(t)` on
/// `[0, horizon]`, with `steps_per_width` time steps per `ε`.
pub fn mollification_constants<T: Real>(
    a: impl Fn(T) -> T,
    horizon: T,
    mu: &Modulus<T>,
    nus: &[i32],
    steps_per_width: usize,
) -> Result<Vec<MollificationConstants>> {
    if (steps_per_width as f64) < MIN_RESOLUTION {
        return Err(Error::Config(format!("{steps_per_width} steps per width, need {MIN_RESOLUTION}")));
    }
    let grid = TorusGrid::<T>::new(1, 2)?;
    nus.iter()
        .map(|&nu| {
            let eps = T::lit(2f64.powi(-2 * nu));
            let kernel = MollifierKernel::new(eps)?;
            let samples = ((horizon / eps).ceil().to_usize().expect("finite") * steps_per_width + 1)
                .max(super::MIN_SAMPLES);
            let tg = TimeGrid::new(horizon, samples)?;
            let field =
                SpaceTimeField::from_fn(tg, &grid, |t, _| Cplx::new(a(t), T::zero()));
            let smooth = mollify_time(&field, &kernel)?;
            let sup = |f: &SpaceTimeField<T>| f.sup_per_slice().into_iter().fold(T::zero(), T::max);
            let sup_diff = sup(&smooth.sub(&field));
            let sup_derivative = sup(&smooth.time_derivative());
            let mu_eps = mu.eval(eps);
            Ok(MollificationConstants {
                nu,
                epsilon: eps.as_f64(),
                mu_eps: mu_eps.as_f64(),
                sup_diff: sup_diff.as_f64(),
                sup_derivative: sup_derivative.as_f64(),
                c_diff: (sup_diff / mu_eps).as_f64(),
                c_derivative: (sup_derivative * eps / mu_eps).as_f64(),
            })
        })
        .collect()
}
