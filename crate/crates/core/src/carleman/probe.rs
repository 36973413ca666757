use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modulus::CarlemanWeight;
use crate::paraproduct::Verdict;
use crate::scalar::Real;
use crate::spectral::{h_norm_sq, random_field, FieldSpec, SpectralField, TorusGrid};

use super::{apply_l, bump, CoefficientSchedule, SpaceTimeField, TimeGrid};

/// Floor on `min c(γ)` for the sweep verdict.
pub const SWEEP_FLOOR: f64 = 1e-6;

/// Relative size below which a slice outside `[0, T/2]` counts as zero.
pub const SUPPORT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CarlemanProbeConfig<T: Real> {
    s: T,
    gammas: Vec<T>,
    weight: CarlemanWeight<T>,
    m: u32,
}

impl<T: Real> CarlemanProbeConfig<T> {
    pub fn new(s: T, gammas: Vec<T>, weight: CarlemanWeight<T>, m: u32) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::Config(format!("Sobolev index s = {s} outside (0, 1)")));
        }
        if gammas.is_empty() || gammas[0] <= T::zero() || gammas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config("gamma list must be positive and strictly increasing".into()));
        }
        Ok(Self { s, gammas, weight, m })
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn gammas(&self) -> &[T] {
        &self.gammas
    }

    pub fn weight(&self) -> &CarlemanWeight<T> {
        &self.weight
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `γT <= tau_max`.
    pub fn check_gamma(&self, gamma: T, horizon: T) -> Result<()> {
        let span = gamma * horizon;
        if span > self.weight.tau_max() {
            return Err(Error::GammaRange {
                gamma: gamma.as_f64(),
                span: span.as_f64(),
                tau_max: self.weight.tau_max().as_f64(),
            });
        }
        Ok(())
    }

    /// Smallest listed `γ` with `Φ''(γ(T - t)) >= 1` on `[0, T/2]`.
    pub fn gamma0(&self, horizon: T) -> Result<Option<T>> {
        for &g in &self.gammas {
            self.check_gamma(g, horizon)?;
            let ok = (0..=64).try_fold(true, |acc, k| {
                let tau = g * horizon * (T::lit(0.5) + T::lit(k as f64 / 128.0));
                self.weight.second_fd(tau).map(|v| acc && v >= T::one() - T::lit(1e-9))
            })?;
            if ok {
                return Ok(Some(g));
            }
        }
        Ok(None)
    }
}

/// Natural logarithms of the three weighted integrals of the Carleman
/// inequality (`-inf` for a vanishing integral); the weights overflow `f64`
/// long before the logarithms do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarlemanSides {
    pub ln_lhs: f64,
    pub ln_rhs_grad: f64,
    pub ln_rhs_l2: f64,
}

fn ln_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }
}

impl CarlemanSides {
    /// `ln c(γ)`, `c(γ) = lhs / (γ^{1/2} rhs_grad + γ rhs_l2)`; `None` when
    /// both right sides vanish.
    pub fn ln_ratio(&self, gamma: f64) -> Option<f64> {
        let den = ln_add(0.5 * gamma.ln() + self.ln_rhs_grad, gamma.ln() + self.ln_rhs_l2);
        (den > f64::NEG_INFINITY).then(|| self.ln_lhs - den)
    }

    /// `c(γ)`, saturating to `inf` past the `f64` range.
    pub fn ratio(&self, gamma: f64) -> Option<f64> {
        self.ln_ratio(gamma).map(f64::exp)
    }
}

/// Per-sample `‖Lu‖²`, `‖∇u‖²`, `‖u‖²` in `H^{-s}` on `[0, T/2]`.
#[derive(Debug, Clone)]
pub(crate) struct SliceNorms<T> {
    time: TimeGrid<T>,
    rows: Vec<(usize, [T; 3])>,
}

fn check_support<T: Real>(u: &SpaceTimeField<T>) -> Result<()> {
    let sup = u.sup_per_slice();
    let global = sup.iter().copied().fold(T::zero(), T::max);
    let half = u.time_grid().horizon() / T::lit(2.0);
    for (i, (t, v)) in u.time_grid().times().zip(&sup).enumerate() {
        if t > half && *v > T::lit(SUPPORT_TOL) * global {
            return Err(Error::Support {
                sample: i,
                time: t.as_f64(),
                reason: format!("|u| = {v} outside [0, T/2]"),
            });
        }
    }
    Ok(())
}

impl<T: Real> SliceNorms<T> {
    pub(crate) fn new(u: &SpaceTimeField<T>, a: &CoefficientSchedule<T>, s: T) -> Result<Self> {
        check_support(u)?;
        let lu = apply_l(u, a, None, None)?;
        let tg = *u.time_grid();
        let half = tg.horizon() / T::lit(2.0);
        let idx: Vec<usize> = (0..tg.len()).filter(|&i| tg.time(i) <= half).collect();
        let rows = idx
            .par_iter()
            .map(|&i| {
                let ui = u.slice(i);
                let grad = (0..ui.grid().dim()).map(|j| h_norm_sq(&ui.derivative(j), -s)).sum();
                (i, [h_norm_sq(lu.slice(i), -s), grad, h_norm_sq(ui, -s)])
            })
            .collect();
        Ok(Self { time: tg, rows })
    }

    pub(crate) fn sides(&self, gamma: T, weight: &CarlemanWeight<T>) -> Result<CarlemanSides> {
        let horizon = self.time.horizon();
        let two = T::lit(2.0);
        let mut terms = Vec::with_capacity(self.rows.len());
        for (i, n) in &self.rows {
            let tau = gamma * (horizon - self.time.time(*i));
            let lw = (two * weight.big_phi(tau)? / gamma).as_f64() + self.time.trapezoid(*i).as_f64().ln();
            terms.push((lw, n));
        }
        let side = |k: usize| {
            let logs: Vec<f64> =
                terms.iter().filter(|(_, n)| n[k] > T::zero()).map(|(lw, n)| lw + n[k].as_f64().ln()).collect();
            let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi == f64::NEG_INFINITY {
                return hi;
            }
            hi + logs.iter().map(|l| (l - hi).exp()).sum::<f64>().ln()
        };
        Ok(CarlemanSides { ln_lhs: side(0), ln_rhs_grad: side(1), ln_rhs_l2: side(2) })
    }
}

/// Weighted sides of the Carleman inequality for `u` supported in `[0, T/2]`:
/// `∫ e^{2Φ(γ(T-t))/γ} ‖Lu‖²`, `∫ e^{..} ‖∇u‖²`, `∫ e^{..} ‖u‖²`, all in `H^{-s}`.
pub fn carleman_sides<T: Real>(
    u: &SpaceTimeField<T>,
    gamma: T,
    cfg: &CarlemanProbeConfig<T>,
    a: &CoefficientSchedule<T>,
) -> Result<CarlemanSides> {
    cfg.check_gamma(gamma, u.time_grid().horizon())?;
    SliceNorms::new(u, a, cfg.s)?.sides(gamma, &cfg.weight)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    /// `inf` when `c(γ)` exceeds the `f64` range; `ln_min_c` stays finite.
    pub min_c: f64,
    pub ln_min_c: f64,
    pub argmin_member: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSweep {
    pub gamma0: f64,
    pub rows: Vec<SweepRow>,
    pub verdict: Verdict,
}

impl GammaSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,min_c,argmin_member\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},{:e},{}\n", r.gamma, r.min_c, r.argmin_member));
        }
        out
    }

    /// Smallest `min c(γ)` over the rows with `γ >= γ0`.
    pub fn floor(&self) -> f64 {
        self.rows.iter().filter(|r| r.gamma >= self.gamma0).map(|r| r.min_c).fold(f64::INFINITY, f64::min)
    }

    /// `ln` of [`GammaSweep::floor`].
    pub fn ln_floor(&self) -> f64 {
        self.rows.iter().filter(|r| r.gamma >= self.gamma0).map(|r| r.ln_min_c).fold(f64::INFINITY, f64::min)
    }
}

/// `γ ↦ min over the ensemble of c(γ)`; pass iff every `γ >= γ0` has
/// `min c(γ) >= 1e-6`. Members with `c` undefined (zero fields) are skipped.
pub fn gamma_sweep<T: Real>(
    ensemble: &[SpaceTimeField<T>],
    cfg: &CarlemanProbeConfig<T>,
    a: &CoefficientSchedule<T>,
) -> Result<GammaSweep> {
    let first = ensemble.first().ok_or_else(|| Error::Config("empty test-function ensemble".into()))?;
    let horizon = first.time_grid().horizon();
    for g in &cfg.gammas {
        cfg.check_gamma(*g, horizon)?;
    }
    let gamma0 = cfg
        .gamma0(horizon)?
        .ok_or_else(|| Error::Config("no gamma in the sweep has Phi'' >= 1 on [0, T/2]".into()))?;
    let norms: Vec<SliceNorms<T>> = ensemble.par_iter().map(|u| SliceNorms::new(u, a, cfg.s)).collect::<Result<_>>()?;
    let rows = cfg
        .gammas
        .iter()
        .map(|&g| {
            let mut best = (f64::INFINITY, 0usize);
            for (k, n) in norms.iter().enumerate() {
                if let Some(lc) = n.sides(g, &cfg.weight)?.ln_ratio(g.as_f64()) {
                    if lc < best.0 || lc.is_nan() {
                        best = (lc, k);
                    }
                }
            }
            Ok(SweepRow { gamma: g.as_f64(), min_c: best.0.exp(), ln_min_c: best.0, argmin_member: best.1 })
        })
        .collect::<Result<Vec<_>>>()?;
    let g0 = gamma0.as_f64();
    let ok = rows.iter().filter(|r| r.gamma >= g0).all(|r| r.min_c >= SWEEP_FLOOR);
    Ok(GammaSweep { gamma0: g0, rows, verdict: Verdict::from_bool(ok) })
}

/// `count` log-spaced values from `start` to `stop` inclusive.
pub fn log_spaced(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        stop
                    } else {
                        (a + (b - a) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// `{bump(t) e^{i M x_1}}` for the given `M`.
pub fn single_mode_ensemble<T: Real>(
    time: TimeGrid<T>,
    grid: &TorusGrid<T>,
    modes: impl IntoIterator<Item = i64>,
) -> Result<Vec<SpaceTimeField<T>>> {
    let horizon = time.horizon();
    modes
        .into_iter()
        .map(|m| {
            let e = SpectralField::mode(grid, [m, 0])?;
            Ok(SpaceTimeField::separable(time, |t| bump(t, horizon), &e))
        })
        .collect()
}

/// `{bump(t) f_k(x)}` with `f_k` seeded random fields.
pub fn random_ensemble<T: Real>(
    time: TimeGrid<T>,
    grid: &TorusGrid<T>,
    spec: &FieldSpec,
    size: usize,
    seed: u64,
) -> Vec<SpaceTimeField<T>> {
    let horizon = time.horizon();
    (0..size)
        .map(|k| {
            let f = random_field(grid, spec, seed, k as u64);
            SpaceTimeField::separable(time, |t| bump(t, horizon), &f)
        })
        .collect()
}
