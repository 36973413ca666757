//! Moduli of continuity, the Osgood condition, and the Carleman weight built
//! from a modulus.

mod catalogue;
mod hermite;
mod weight;

pub use catalogue::catalogue_names;
pub use hermite::MonotoneHermite;
pub use weight::{check_weight_ode, weight_table_csv, CarlemanWeight, OdeCheck, WeightOptions};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::geometric_simpson;
use crate::scalar::Real;

type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A modulus of continuity on `[0, 1]`.
///
/// The function is held behind an `Arc` so a modulus can be cloned into
/// every weight and probe that needs it.
#[derive(Clone)]
pub struct Modulus<T> {
    name: String,
    eval: ScalarFn<T>,
    analytic_tail: Option<ScalarFn<T>>,
}

impl<T: Real> fmt::Debug for Modulus<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("name", &self.name)
            .field("analytic_tail", &self.analytic_tail.is_some())
            .finish()
    }
}

impl<T: Real> Modulus<T> {
    pub fn new(name: impl Into<String>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { name: name.into(), eval: Arc::new(eval), analytic_tail: None }
    }

    /// Attaches a closed form for `delta -> ∫_delta^1 ds / mu(s)`, used only as a test oracle.
    pub fn with_tail(mut self, tail: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.analytic_tail = Some(Arc::new(tail));
        self
    }

    /// Rescales so that `mu(1) = 1`. The closed-form tail, if any, is rescaled too.
    pub fn normalized(self) -> Self {
        let top = (self.eval)(T::one());
        if top == T::one() || !top.is_finite() || top <= T::zero() {
            return self;
        }
        let eval = self.eval.clone();
        let tail = self.analytic_tail.clone();
        Self {
            name: self.name,
            eval: Arc::new(move |s| eval(s) / top),
            analytic_tail: tail.map(|t| Arc::new(move |d| t(d) * top) as ScalarFn<T>),
        }
    }

    #[inline]
    pub fn eval(&self, s: T) -> T {
        (self.eval)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn analytic_tail(&self, delta: T) -> Option<T> {
        self.analytic_tail.as_ref().map(|t| t(delta))
    }

    /// `sigma * mu(1 / sigma)`, computed as `mu(s) / s` so it never overflows.
    #[inline]
    pub fn growth(&self, sigma: T) -> T {
        let s = sigma.recip();
        self.eval(s) / s
    }

    /// Looks a modulus up in the built-in catalogue: `lip`, `sqrt`, `loglip`, `holder:<alpha>`.
    pub fn from_catalogue(name: &str) -> Result<Self> {
        catalogue::lookup(name)
    }

    pub fn lipschitz() -> Self {
        catalogue::lipschitz()
    }

    pub fn sqrt() -> Self {
        catalogue::holder(T::lit(0.5), "sqrt")
    }

    pub fn log_lipschitz() -> Self {
        catalogue::log_lipschitz()
    }

    pub fn holder(alpha: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::Domain(format!("holder exponent {alpha} outside (0, 1]")));
        }
        Ok(catalogue::holder(alpha, &format!("holder:{alpha}")))
    }
}

/// Property of a modulus checked by [`validate_modulus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusProperty {
    Endpoints,
    StrictlyIncreasing,
    Concave,
    AboveDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub property: ModulusProperty,
    /// First sample point (or pair) witnessing the failure.
    pub witness: Vec<f64>,
    /// Number of grid points or pairs that fail.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn violates(&self, p: ModulusProperty) -> bool {
        self.violations.iter().any(|v| v.property == p)
    }
}

pub const VALIDATION_POINTS: usize = 1024;
pub const CONCAVITY_POINTS: usize = 64;
const VALIDATION_SLACK: f64 = 1e-12;

/// Checks endpoints, strict monotonicity, midpoint concavity and `mu(s) >= s`
/// on a uniform grid of `VALIDATION_POINTS + 1` samples.
pub fn validate_modulus<T: Real>(mu: &Modulus<T>) -> Result<ValidationReport> {
    let slack = T::lit(VALIDATION_SLACK);
    let n = VALIDATION_POINTS;
    let grid: Vec<T> = (0..=n).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n)).collect();
    let vals = grid
        .iter()
        .map(|&s| {
            let v = mu.eval(s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation { name: mu.name().to_string(), at: s.as_f64() })
            }
        })
        .collect::<Result<Vec<T>>>()?;

    let mut violations = Vec::new();
    let mut record = |property, witness: Vec<f64>| match violations
        .iter_mut()
        .find(|v: &&mut Violation| v.property == property)
    {
        Some(v) => v.count += 1,
        None => violations.push(Violation { property, witness, count: 1 }),
    };

    if vals[0].abs() > slack {
        record(ModulusProperty::Endpoints, vec![0.0]);
    }
    if (vals[n] - T::one()).abs() > slack {
        record(ModulusProperty::Endpoints, vec![1.0]);
    }
    for i in 0..n {
        if vals[i + 1] <= vals[i] {
            record(ModulusProperty::StrictlyIncreasing, vec![grid[i + 1].as_f64()]);
        }
    }
    for (s, v) in grid.iter().zip(&vals) {
        if *v < *s - slack {
            record(ModulusProperty::AboveDiagonal, vec![s.as_f64()]);
        }
    }
    let sub: Vec<T> = (0..CONCAVITY_POINTS)
        .map(|j| T::from_usize_lossy(j) / T::from_usize_lossy(CONCAVITY_POINTS - 1))
        .collect();
    let sub_vals: Vec<T> = sub.iter().map(|&s| mu.eval(s)).collect();
    let half = T::lit(0.5);
    for i in 0..sub.len() {
        for j in (i + 1)..sub.len() {
            let mid = mu.eval((sub[i] + sub[j]) * half);
            if mid < (sub_vals[i] + sub_vals[j]) * half - slack {
                record(ModulusProperty::Concave, vec![sub[i].as_f64(), sub[j].as_f64()]);
            }
        }
    }

    Ok(ValidationReport { name: mu.name().to_string(), pass: violations.is_empty(), violations })
}

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-11;

/// `∫_delta^1 ds / mu(s)` by adaptive Simpson over dyadic pieces of `[delta, 1]`.
pub fn osgood_tail<T: Real>(mu: &Modulus<T>, delta: T, rel_tol: T) -> Result<T> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1)")));
    }
    let pieces = (delta.recip().log2().ceil().to_usize().unwrap_or(1)).max(1) + 1;
    let f = |s: T| mu.eval(s).recip();
    let v = geometric_simpson(&f, delta, T::one(), pieces, rel_tol);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation { name: mu.name().to_string(), at: delta.as_f64() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OsgoodVerdict {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OsgoodReport {
    pub verdict: OsgoodVerdict,
    pub tails: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Ratio thresholds of the Osgood heuristic.
pub const DIVERGENCE_RATIO: f64 = 0.9;
pub const CONVERGENCE_RATIO: f64 = 0.5;

/// Heuristic classification of `∫_0^1 ds / mu(s)` from tails along a
/// decreasing `delta` sequence.
///
/// Successive tail increments are compared by ratio over the second half of
/// the sequence. Ratios below 0.5 mean geometric contraction (`Converges`).
/// Ratios at or above 0.9, or ratios creeping upward with an Aitken-extrapolated
/// limit at or above 0.9, mean the increments do not contract (`Diverges`).
/// Not a proof; tests only use moduli whose classification is known.
pub fn osgood_verdict<T: Real>(mu: &Modulus<T>, deltas: &[T]) -> Result<OsgoodReport> {
    if deltas.len() < 6 {
        return Err(Error::Domain(format!("need at least 6 deltas, got {}", deltas.len())));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("delta sequence must be strictly decreasing".into()));
    }
    let tol = T::lit(DEFAULT_QUADRATURE_TOL);
    let tails = deltas.iter().map(|&d| osgood_tail(mu, d, tol)).collect::<Result<Vec<T>>>()?;
    let increments: Vec<T> = tails.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<T> = increments.windows(2).map(|w| w[1] / w[0]).collect();

    let recent = &ratios[ratios.len() / 2..];
    let div = T::lit(DIVERGENCE_RATIO);
    let conv = T::lit(CONVERGENCE_RATIO);
    let verdict = if recent.iter().all(|&r| r < conv) {
        OsgoodVerdict::Converges
    } else if recent.iter().all(|&r| r >= div) {
        OsgoodVerdict::Diverges
    } else if recent.windows(2).all(|w| w[1] >= w[0]) && aitken_limit(recent) >= div {
        OsgoodVerdict::Diverges
    } else {
        OsgoodVerdict::Inconclusive
    };
    Ok(OsgoodReport {
        verdict,
        tails: tails.iter().map(|t| t.as_f64()).collect(),
        ratios: ratios.iter().map(|r| r.as_f64()).collect(),
    })
}

/// Default delta sequence `10^-j`, `j = 1..8`.
pub fn default_deltas<T: Real>() -> Vec<T> {
    (1..=8).map(|j| T::lit(10f64.powi(-j))).collect()
}

fn aitken_limit<T: Real>(xs: &[T]) -> T {
    let n = xs.len();
    if n < 3 {
        return xs[n - 1];
    }
    let (a, b, c) = (xs[n - 3], xs[n - 2], xs[n - 1]);
    let d1 = c - b;
    let d2 = c - b - (b - a);
    if d2 < T::zero() {
        c - d1 * d1 / d2
    } else if d1 > T::zero() {
        // Accelerating toward 1: no geometric contraction in sight.
        T::one()
    } else {
        c
    }
}

/// Checks that `sigma -> sigma mu(1/sigma)` is nondecreasing and
/// `sigma -> 1 / (sigma^2 mu(1/sigma))` nonincreasing on `sigma = 2^j, j = 0..=20`.
pub fn growth_properties<T: Real>(mu: &Modulus<T>) -> (bool, bool) {
    let sigmas: Vec<T> = (0..=20).map(|j| T::lit(2f64.powi(j))).collect();
    let growth: Vec<T> = sigmas.iter().map(|&s| mu.growth(s)).collect();
    let decay: Vec<T> = sigmas.iter().zip(&growth).map(|(&s, &g)| (s * g).recip()).collect();
    let slack = T::lit(1e-12);
    let up = growth.windows(2).all(|w| w[1] >= w[0] * (T::one() - slack));
    let down = decay.windows(2).all(|w| w[1] <= w[0] * (T::one() + slack));
    (up, down)
}
