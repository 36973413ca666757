use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::random::derive_seed;
use crate::spectral::{apply_delta, h_norm, lip_norm, random_field, FieldSpec, NormMethod, SpectralField, TorusGrid};

use super::commutator::commutator_with;
use super::{Paraproduct, ParaproductConfig};

/// The paraproduct estimates that carry an unnamed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `||T^m_a u||_{H^s} <= C ||a||_∞ ||u||_{H^s}`.
    Boundedness,
    /// `||au - T^m_a u||_{H^{1-s}} <= C ||a||_Lip ||u||_{H^{-s}}`.
    Remainder,
    /// `(Σ_ν 2^{-2νs} ||∂_j [Δ_ν, T^m_a] ∂_h u||²)^{1/2} <= C ||a||_Lip ||u||_{H^{1-s}}`.
    Commutator,
    /// `||(T^m_a - (T^m_a)^*) ∂_j u|| <= C ||a||_Lip ||u||`.
    AdjointDefect,
}

impl Inequality {
    pub const ALL: [Inequality; 4] =
        [Inequality::Boundedness, Inequality::Remainder, Inequality::Commutator, Inequality::AdjointDefect];

    pub fn id(self) -> &'static str {
        match self {
            Inequality::Boundedness => "boundedness",
            Inequality::Remainder => "remainder",
            Inequality::Commutator => "commutator",
            Inequality::AdjointDefect => "adjoint_defect",
        }
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// One evaluation: the left side, the ratio to the right side, and the ratio
/// without the gain (the bare operator in place of the defect), where defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measurement {
    pub lhs: f64,
    pub constant: f64,
    pub naive: Option<f64>,
}

fn ratio<T: Real>(num: T, den: T) -> f64 {
    if num == T::zero() {
        0.0
    } else {
        (num / den).as_f64()
    }
}

/// Dyadic `H^{-s}`-weighted sum `(Σ_ν 2^{-2νs} ||f_ν||²)^{1/2}`.
fn weighted<T: Real>(s: T, parts: impl Iterator<Item = (i32, T)>) -> T {
    parts
        .map(|(nu, n)| T::lit(2.0).powf(-T::lit(2.0 * nu as f64) * s) * n * n)
        .sum::<T>()
        .sqrt()
}

pub fn measure<T: Real>(
    ineq: Inequality,
    cfg: &ParaproductConfig<T>,
    a: &SpectralField<T>,
    u: &SpectralField<T>,
) -> Result<Measurement> {
    cfg.check(u)?;
    let op = Paraproduct::new(cfg, a)?;
    let s = cfg.s();
    let dim = cfg.grid().dim();
    let k_max = cfg.grid().k_max();
    let h = |f: &SpectralField<T>, r: T| h_norm(f, r, NormMethod::Direct);
    let lip = || lip_norm(a, NormMethod::Direct).map(|l| l.value);
    let out = match ineq {
        Inequality::Boundedness => {
            let lhs = h(&op.apply(u), s);
            Measurement { lhs: lhs.as_f64(), constant: ratio(lhs, a.max_abs() * h(u, s)), naive: None }
        }
        Inequality::Remainder => {
            let au = a.product(u);
            let lhs = h(&au.sub(&op.apply(u)), T::one() - s);
            let den = lip()? * h(u, -s);
            Measurement {
                lhs: lhs.as_f64(),
                constant: ratio(lhs, den),
                naive: Some(ratio(h(&au, T::one() - s), den)),
            }
        }
        Inequality::Commutator => {
            let den = lip()? * h(u, T::one() - s);
            let mut best = (T::zero(), T::zero());
            for hx in 0..dim {
                let w = u.derivative(hx);
                let tw = op.apply(&w);
                let comms: Vec<_> = (0..=k_max).map(|nu| commutator_with(&op, &w, nu)).collect();
                for j in 0..dim {
                    let lhs = weighted(s, comms.iter().enumerate().map(|(nu, c)| (nu as i32, c.derivative(j).l2_norm())));
                    let bare = weighted(
                        s,
                        (0..=k_max).map(|nu| (nu, apply_delta(&tw, nu).derivative(j).l2_norm())),
                    );
                    best = (best.0.max(lhs), best.1.max(bare));
                }
            }
            Measurement { lhs: best.0.as_f64(), constant: ratio(best.0, den), naive: Some(ratio(best.1, den)) }
        }
        Inequality::AdjointDefect => {
            let den = lip()? * u.l2_norm();
            let mut best = (T::zero(), T::zero());
            for j in 0..dim {
                let du = u.derivative(j);
                let t = op.apply(&du);
                let lhs = t.sub(&op.apply_adjoint(&du)).l2_norm();
                best = (best.0.max(lhs), best.1.max(t.l2_norm()));
            }
            Measurement { lhs: best.0.as_f64(), constant: ratio(best.0, den), naive: Some(ratio(best.1, den)) }
        }
    };
    Ok(out)
}

/// Source of the coefficient `a` for each ensemble member.
#[derive(Clone)]
pub enum Coefficient {
    /// The same function for every member.
    Fixed { label: String, f: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync> },
    /// Random real field rescaled to `||a||_∞ = 1`.
    Random(FieldSpec),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Fixed { label, .. } => write!(f, "Fixed({label})"),
            Coefficient::Random(spec) => write!(f, "Random({spec:?})"),
        }
    }
}

impl Coefficient {
    pub fn fixed(label: impl Into<String>, f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Fixed { label: label.into(), f: Arc::new(f) }
    }

    pub fn label(&self) -> String {
        match self {
            Coefficient::Fixed { label, .. } => label.clone(),
            Coefficient::Random(_) => "random".into(),
        }
    }

    pub fn sample<T: Real>(&self, grid: &TorusGrid<T>, seed: u64, member: u64) -> SpectralField<T> {
        match self {
            Coefficient::Fixed { f, .. } => {
                SpectralField::from_real_fn(grid, |x| T::lit(f([x[0].as_f64(), x[1].as_f64()])))
            }
            Coefficient::Random(spec) => {
                let a = random_field(grid, &spec.real(), derive_seed(seed, 0xA), member);
                let sup = a.max_abs();
                if sup == T::zero() {
                    a
                } else {
                    a.scale(sup.recip())
                }
            }
        }
    }
}

/// Seeded `(a, u)` pairs; member `i` is reproducible on every grid size.
#[derive(Debug, Clone)]
pub struct ProbeEnsemble {
    pub size: usize,
    pub seed: u64,
    pub u_spec: FieldSpec,
    pub coefficient: Coefficient,
}

impl ProbeEnsemble {
    pub fn pair<T: Real>(&self, grid: &TorusGrid<T>, member: usize) -> (SpectralField<T>, SpectralField<T>) {
        let a = self.coefficient.sample(grid, self.seed, member as u64);
        let u = random_field(grid, &self.u_spec, derive_seed(self.seed, 0xB), member as u64);
        (a, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionEntry {
    #[serde(rename = "N")]
    pub n: usize,
    pub constant: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub naive: Option<f64>,
}

/// Measured constant of one estimate over an ensemble and a resolution ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub inequality: String,
    pub m: u32,
    pub s: f64,
    /// Finest resolution tested.
    #[serde(rename = "N")]
    pub n: usize,
    pub dim: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub constant: f64,
    pub per_resolution: Vec<ResolutionEntry>,
    pub verdict: Verdict,
}

/// Below this a measured constant counts as zero, so `0 -> 0` is not growth.
const ZERO_FLOOR: f64 = 1e-12;

impl ProbeReport {
    /// Pass iff every constant is finite and each step of the ladder grows by
    /// at most `max_growth` (relative).
    pub fn assemble(
        inequality: impl Into<String>,
        m: u32,
        s: f64,
        dim: usize,
        ensemble: usize,
        seed: u64,
        per_resolution: Vec<ResolutionEntry>,
        max_growth: f64,
    ) -> Self {
        let values: Vec<f64> = per_resolution.iter().map(|e| e.constant).collect();
        let verdict = Verdict::from_bool(resolution_stable(&values, max_growth));
        Self {
            inequality: inequality.into(),
            m,
            s,
            n: per_resolution.iter().map(|e| e.n).max().unwrap_or(0),
            dim,
            ensemble,
            seed,
            constant: values.iter().copied().fold(0.0, f64::max),
            per_resolution,
            verdict,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Finite values, each at most `(1 + max_growth)` times its predecessor.
pub fn resolution_stable(values: &[f64], max_growth: f64) -> bool {
    values.iter().all(|v| v.is_finite())
        && values.windows(2).all(|p| p[1] <= (1.0 + max_growth) * p[0] || p[1] <= ZERO_FLOOR)
}

/// Sup of the ensemble ratios at each resolution in `ns` (increasing, each a
/// doubling of the previous), with the 25% stability verdict.
pub fn probe(
    ineq: Inequality,
    m: u32,
    s: f64,
    dim: usize,
    ns: &[usize],
    ensemble: &ProbeEnsemble,
) -> Result<ProbeReport> {
    if ensemble.size == 0 || ns.is_empty() {
        return Err(Error::Config("probe needs a nonempty ensemble and resolution list".into()));
    }
    if ns.windows(2).any(|p| p[1] != 2 * p[0]) {
        return Err(Error::Config(format!("resolutions {ns:?} are not successive doublings")));
    }
    let mut per_resolution = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = TorusGrid::<f64>::new(dim, n)?;
        let cfg = ParaproductConfig::new(&grid, m, s)?;
        let ms: Vec<Measurement> = (0..ensemble.size)
            .into_par_iter()
            .map(|i| {
                let (a, u) = ensemble.pair(&grid, i);
                measure(ineq, &cfg, &a, &u)
            })
            .collect::<Result<_>>()?;
        let constant = ms.iter().map(|x| x.constant).fold(0.0, max_nan);
        let naive = ms.iter().map(|x| x.naive).collect::<Option<Vec<_>>>().map(|v| v.into_iter().fold(0.0, max_nan));
        per_resolution.push(ResolutionEntry { n, constant, naive });
    }
    Ok(ProbeReport::assemble(ineq.id(), m, s, dim, ensemble.size, ensemble.seed, per_resolution, 0.25))
}

/// `max` that propagates NaN.
fn max_nan(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
