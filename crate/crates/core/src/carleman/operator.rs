use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modulus::Modulus;
use crate::paraproduct::{CoefficientMatrix, Paraproduct, ParaproductConfig};
use crate::scalar::{Cplx, Real};
use crate::spectral::{SpectralField, TorusGrid};

use super::{CarlemanProbeConfig, MollifierKernel, SpaceTimeField, TimeGrid};

/// Coefficient matrix per time sample.
#[derive(Debug, Clone)]
pub enum CoefficientSchedule<T: Real> {
    Static(CoefficientMatrix<T>),
    Sampled(Vec<CoefficientMatrix<T>>),
}

impl<T: Real> CoefficientSchedule<T> {
    pub fn at(&self, i: usize) -> &CoefficientMatrix<T> {
        match self {
            CoefficientSchedule::Static(a) => a,
            CoefficientSchedule::Sampled(v) => &v[i],
        }
    }

    fn first(&self) -> &CoefficientMatrix<T> {
        self.at(0)
    }

    pub fn dim(&self) -> usize {
        self.first().dim()
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.first().grid()
    }

    /// Smallest ellipticity floor over time.
    pub fn lambda0(&self) -> T {
        match self {
            CoefficientSchedule::Static(a) => a.lambda0(),
            CoefficientSchedule::Sampled(v) => v.iter().map(|a| a.lambda0()).fold(T::infinity(), T::min),
        }
    }

    pub fn check(&self, u: &SpaceTimeField<T>) -> Result<()> {
        if let CoefficientSchedule::Sampled(v) = self {
            if v.len() != u.time_grid().len() {
                return Err(Error::Config(format!(
                    "{} coefficient slices for {} time samples",
                    v.len(),
                    u.time_grid().len()
                )));
            }
        }
        if self.grid() != u.grid() {
            return Err(Error::Config(format!("coefficients on {:?}, field on {:?}", self.grid(), u.grid())));
        }
        Ok(())
    }

    /// Entry `a_jk` as a space-time field.
    pub fn entry_field(&self, j: usize, k: usize, time: TimeGrid<T>) -> SpaceTimeField<T> {
        let slices = (0..time.len()).map(|i| self.at(i).entry(j, k).clone()).collect();
        SpaceTimeField::new(time, slices).expect("one slice per sample")
    }

    /// Entrywise time mollification. Static schedules are returned unchanged.
    pub fn mollified(&self, kernel: &MollifierKernel<T>, time: TimeGrid<T>) -> Result<Self> {
        let v = match self {
            CoefficientSchedule::Static(_) => return Ok(self.clone()),
            CoefficientSchedule::Sampled(v) => v,
        };
        let d = self.dim();
        let n_upper = d * (d + 1) / 2;
        let smooth: Vec<SpaceTimeField<T>> = (0..n_upper)
            .map(|e| {
                let slices = v.iter().map(|a| a.entries_upper()[e].clone()).collect();
                super::mollify_time(&SpaceTimeField::new(time, slices)?, kernel)
            })
            .collect::<Result<_>>()?;
        let mats = (0..time.len())
            .map(|i| {
                let upper = smooth.iter().map(|f| f.slice(i).clone()).collect();
                // A convex combination of elliptic matrices keeps the floor.
                CoefficientMatrix::from_upper(upper, self.lambda0())
            })
            .collect::<Result<_>>()?;
        Ok(CoefficientSchedule::Sampled(mats))
    }
}

/// Named coefficient constructors of the run configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recipe {
    /// `a_jk = δ_jk`.
    Identity,
    /// `a_jk = (2 + sin x_1) δ_jk`.
    ScalarTwoPlusSin,
    /// `a_jk = θ(t) δ_jk` with the lacunary profile
    /// `θ(t) = 2 + Σ_{j=1}^J μ(4^{-j}) cos(2π 4^j t / T) / Σ_{j=1}^J μ(4^{-j})`,
    /// `J` the largest index with at least 8 samples per period.
    RoughInTime(String),
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Recipe::Identity),
            "scalar:2+sin" => Ok(Recipe::ScalarTwoPlusSin),
            _ => match s.strip_prefix("rough-in-time:") {
                Some(name) => {
                    Modulus::<f64>::from_catalogue(name)?;
                    Ok(Recipe::RoughInTime(name.to_string()))
                }
                None => Err(Error::Config(format!("unknown coefficient recipe `{s}`"))),
            },
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recipe::Identity => f.write_str("identity"),
            Recipe::ScalarTwoPlusSin => f.write_str("scalar:2+sin"),
            Recipe::RoughInTime(m) => write!(f, "rough-in-time:{m}"),
        }
    }
}

impl Recipe {
    /// Number of lacunary terms resolved by `samples` time samples.
    pub fn lacunary_terms(samples: usize) -> u32 {
        let mut j = 0;
        while 4usize.pow(j + 1) * 8 <= samples - 1 {
            j += 1;
        }
        j
    }

    /// Time profile of the rough recipe (`None` for the others).
    pub fn time_profile<T: Real>(&self, horizon: T, samples: usize) -> Result<Option<impl Fn(T) -> T>> {
        let Recipe::RoughInTime(name) = self else { return Ok(None) };
        let mu = Modulus::<T>::from_catalogue(name)?;
        let terms = Self::lacunary_terms(samples).max(1);
        let amps: Vec<(T, T)> = (1..=terms)
            .map(|j| {
                let f = T::lit(4f64.powi(j as i32));
                (mu.eval(f.recip()), f)
            })
            .collect();
        let total: T = amps.iter().map(|a| a.0).sum();
        let two_pi = T::PI() * T::lit(2.0);
        Ok(Some(move |t: T| {
            T::lit(2.0)
                + amps.iter().map(|(a, f)| *a * (two_pi * *f * t / horizon).cos()).sum::<T>() / total
        }))
    }

    /// Human-readable formula recorded in reports.
    pub fn description(&self, samples: usize) -> String {
        match self {
            Recipe::Identity => "a_jk = delta_jk".into(),
            Recipe::ScalarTwoPlusSin => "a_jk = (2 + sin x_1) delta_jk".into(),
            Recipe::RoughInTime(m) => format!(
                "a_jk = (2 + sum_{{j=1..{}}} mu(4^-j) cos(2 pi 4^j t/T) / sum_j mu(4^-j)) delta_jk, mu = {m}",
                Self::lacunary_terms(samples).max(1)
            ),
        }
    }

    pub fn build<T: Real>(&self, grid: &TorusGrid<T>, time: TimeGrid<T>) -> Result<CoefficientSchedule<T>> {
        match self {
            Recipe::Identity => Ok(CoefficientSchedule::Static(CoefficientMatrix::identity(grid))),
            Recipe::ScalarTwoPlusSin => {
                let a = SpectralField::from_real_fn(grid, |x| T::lit(2.0) + x[0].sin());
                Ok(CoefficientSchedule::Static(CoefficientMatrix::scalar(&a, T::one())?))
            }
            Recipe::RoughInTime(_) => {
                let theta = self.time_profile(time.horizon(), time.len())?.expect("rough recipe");
                let mats = time
                    .times()
                    .map(|t| {
                        CoefficientMatrix::scalar(&SpectralField::constant(grid, Cplx::new(theta(t), T::zero())), T::one())
                    })
                    .collect::<Result<_>>()?;
                Ok(CoefficientSchedule::Sampled(mats))
            }
        }
    }
}

/// `Σ_jk ∂_j(a_jk ∂_k u)` on one slice.
pub(crate) fn divergence_form<T: Real>(a: &CoefficientMatrix<T>, u: &SpectralField<T>) -> SpectralField<T> {
    let d = a.dim();
    let grads: Vec<_> = (0..d).map(|k| u.derivative(k)).collect();
    let mut out = SpectralField::zeros(u.grid());
    for j in 0..d {
        let mut flux = SpectralField::zeros(u.grid());
        for (k, g) in grads.iter().enumerate() {
            flux = flux.add(&a.entry(j, k).product(g));
        }
        out = out.add(&flux.derivative(j));
    }
    out
}

/// Paraproduct operators `T^m_{a_jk}` for one coefficient matrix.
pub(crate) struct ParaMatrix<T: Real> {
    dim: usize,
    ops: Vec<Paraproduct<T>>,
}

impl<T: Real> ParaMatrix<T> {
    pub(crate) fn new(a: &CoefficientMatrix<T>, m: u32) -> Result<Self> {
        Self::from_entries(a.dim(), a.entries_upper(), m)
    }

    /// From upper-triangle entries with no ellipticity requirement.
    pub(crate) fn from_entries(dim: usize, upper: &[SpectralField<T>], m: u32) -> Result<Self> {
        let cfg = ParaproductConfig::new(upper[0].grid(), m, T::lit(0.5))?;
        let ops = upper.iter().map(|e| Paraproduct::new(&cfg, e)).collect::<Result<_>>()?;
        Ok(Self { dim, ops })
    }

    pub(crate) fn op(&self, j: usize, k: usize) -> &Paraproduct<T> {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        &self.ops[j * self.dim - j * (j + 1) / 2 + k]
    }

    /// `Σ_jk ∂_j(T^m_{a_jk} ∂_k u)`.
    pub(crate) fn divergence_form(&self, u: &SpectralField<T>) -> SpectralField<T> {
        let grads: Vec<_> = (0..self.dim).map(|k| u.derivative(k)).collect();
        let mut out = SpectralField::zeros(u.grid());
        for j in 0..self.dim {
            let mut flux = SpectralField::zeros(u.grid());
            for (k, g) in grads.iter().enumerate() {
                flux = flux.add(&self.op(j, k).apply(g));
            }
            out = out.add(&flux.derivative(j));
        }
        out
    }
}

/// Paraproduct matrices for every time sample (shared when static).
pub(crate) enum ParaSchedule<T: Real> {
    Static(ParaMatrix<T>),
    Sampled(Vec<ParaMatrix<T>>),
}

impl<T: Real> ParaSchedule<T> {
    pub(crate) fn new(a: &CoefficientSchedule<T>, m: u32) -> Result<Self> {
        Ok(match a {
            CoefficientSchedule::Static(a) => ParaSchedule::Static(ParaMatrix::new(a, m)?),
            CoefficientSchedule::Sampled(v) => {
                ParaSchedule::Sampled(v.par_iter().map(|a| ParaMatrix::new(a, m)).collect::<Result<_>>()?)
            }
        })
    }

    pub(crate) fn at(&self, i: usize) -> &ParaMatrix<T> {
        match self {
            ParaSchedule::Static(p) => p,
            ParaSchedule::Sampled(v) => &v[i],
        }
    }
}

/// `Lu = ∂_t u + Σ ∂_j(a_jk ∂_k u) + Σ b_j ∂_j u + c u`.
pub fn apply_l<T: Real>(
    u: &SpaceTimeField<T>,
    a: &CoefficientSchedule<T>,
    b: Option<&[SpaceTimeField<T>]>,
    c: Option<&SpaceTimeField<T>>,
) -> Result<SpaceTimeField<T>> {
    a.check(u)?;
    if let Some(b) = b {
        if b.len() != a.dim() {
            return Err(Error::Config(format!("{} drift fields for dim {}", b.len(), a.dim())));
        }
        for f in b {
            u.ensure_compatible(f).map_err(|e| Error::Config(e.to_string()))?;
        }
    }
    if let Some(c) = c {
        u.ensure_compatible(c).map_err(|e| Error::Config(e.to_string()))?;
    }
    let spatial: Vec<SpectralField<T>> = (0..u.time_grid().len())
        .into_par_iter()
        .map(|i| {
            let ui = u.slice(i);
            let mut out = divergence_form(a.at(i), ui);
            if let Some(b) = b {
                for (j, bj) in b.iter().enumerate() {
                    out = out.add(&bj.slice(i).product(&ui.derivative(j)));
                }
            }
            if let Some(c) = c {
                out = out.add(&c.slice(i).product(ui));
            }
            out
        })
        .collect();
    Ok(u.time_derivative().add(&SpaceTimeField::new(*u.time_grid(), spatial)?))
}

/// `∂_t u + Σ ∂_j(T^m_{a_jk} ∂_k u)`.
pub fn apply_p_para<T: Real>(
    u: &SpaceTimeField<T>,
    a: &CoefficientSchedule<T>,
    cfg: &CarlemanProbeConfig<T>,
) -> Result<SpaceTimeField<T>> {
    a.check(u)?;
    let para = ParaSchedule::new(a, cfg.m())?;
    let spatial: Vec<SpectralField<T>> =
        (0..u.time_grid().len()).into_par_iter().map(|i| para.at(i).divergence_form(u.slice(i))).collect();
    Ok(u.time_derivative().add(&SpaceTimeField::new(*u.time_grid(), spatial)?))
}
