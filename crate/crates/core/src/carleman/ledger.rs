use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{bernstein_check, block_annulus, SpectralField};

use super::operator::{ParaMatrix, ParaSchedule};
use super::{bump, CarlemanProbeConfig, CoefficientSchedule, MollifierKernel, SpaceTimeField, TimeGrid};

/// Relative tolerance of the per-sample algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Relative tolerance of identities that integrate by parts in time on the
/// sampled grid.
pub const DISCRETE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub inequality: String,
    pub time: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Every intermediate inequality of the Carleman argument for one block,
/// evaluated on `v = bump(t) v_ν(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProofLedger {
    pub nu: i32,
    pub gamma: f64,
    pub epsilon: f64,
    pub lambda0: f64,
    pub rows: Vec<LedgerRow>,
    /// Measured constants, keyed by name.
    pub constants: BTreeMap<String, f64>,
}

impl ProofLedger {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("inequality,time,lhs,rhs,holds\n");
        for r in &self.rows {
            let t = r.time.map(|t| format!("{t:e}")).unwrap_or_default();
            out.push_str(&format!("{},{t},{:e},{:e},{}\n", r.inequality, r.lhs, r.rhs, r.holds));
        }
        out
    }

    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }

    /// Rows with the given label.
    pub fn rows_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a LedgerRow> + 'a {
        self.rows.iter().filter(move |r| r.inequality == name)
    }

    pub fn failures(&self) -> Vec<&LedgerRow> {
        self.rows.iter().filter(|r| !r.holds).collect()
    }
}

fn row(name: &str, time: Option<f64>, lhs: f64, rhs: f64, holds: bool) -> LedgerRow {
    LedgerRow { inequality: name.to_string(), time, lhs, rhs, holds }
}

fn geq(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs >= rhs - IDENTITY_TOL * scale.abs()
}

fn close(lhs: f64, rhs: f64, scale: f64, tol: f64) -> bool {
    (lhs - rhs).abs() <= tol * scale.abs().max(f64::MIN_POSITIVE)
}

/// `v_ν` must live in the `ν`-annulus.
fn check_block<T: Real>(v: &SpectralField<T>, nu: i32) -> Result<()> {
    bernstein_check(v, nu, 0)?;
    if nu >= 1 {
        let (lo, _) = block_annulus(nu);
        let g = v.grid();
        let tol = T::lit(1e-14) * v.max_coeff();
        for (i, c) in v.coeffs().iter().enumerate() {
            let r = g.xi_norm(i);
            if r <= T::lit(lo) && c.norm() > tol {
                return Err(Error::NotABlock { nu, xi: r.as_f64(), magnitude: c.norm().as_f64() });
            }
        }
    }
    Ok(())
}

/// `Re Σ_jk ⟨P_jk f_k, g_j⟩` for paraproduct matrix `P`.
fn pairing<T: Real>(
    p: &ParaMatrix<T>,
    f: &[SpectralField<T>],
    g: &[SpectralField<T>],
    adjoint_part: bool,
) -> f64 {
    let mut acc = 0.0;
    for (j, gj) in g.iter().enumerate() {
        for (k, fk) in f.iter().enumerate() {
            let op = p.op(j, k);
            let tf = if adjoint_part { op.apply(fk).sub(&op.apply_adjoint(fk)) } else { op.apply(fk) };
            acc += tf.inner(gj).re.as_f64();
        }
    }
    acc
}

fn norms<T: Real>(f: &[SpectralField<T>]) -> Vec<f64> {
    f.iter().map(|x| x.l2_norm().as_f64()).collect()
}

/// Per-sample ingredients of the ledger.
struct Sample {
    i: usize,
    t: f64,
    v: f64,
    grad: f64,
    b0: f64,
    b: f64,
    dv: f64,
    b0_v: (f64, f64),
    flux_pairing: f64,
    energy: (f64, f64, f64),
    cross_b0: f64,
    /// `-2 Re Σ⟨∂_j∂_t v, T_a ∂_k v⟩`, split by `a = (a - a_ε) + a_ε`.
    spatial_parts: (f64, f64),
    time_parts: (f64, f64),
    /// `Σ_jk ‖∂_j∂_t v‖ ‖∂_k v‖`.
    cross: f64,
    phi1: f64,
    phi2: f64,
}

/// Evaluates the intermediate inequalities of the Carleman argument on
/// `v(t, x) = bump(t) v_ν(x)` at parameter `γ`, with `ε = 2^{-2ν}`
/// (`1/2` for `ν = 0`).
pub fn proof_ledger_probe<T: Real>(
    v_block: &SpectralField<T>,
    nu: i32,
    gamma: T,
    cfg: &CarlemanProbeConfig<T>,
    a: &CoefficientSchedule<T>,
    time: TimeGrid<T>,
) -> Result<ProofLedger> {
    check_block(v_block, nu)?;
    let horizon = time.horizon();
    cfg.check_gamma(gamma, horizon)?;
    let eps = if nu == 0 { 0.5 } else { 2f64.powi(-2 * nu) };
    let kernel = MollifierKernel::new(T::lit(eps))?;
    let v = SpaceTimeField::separable(time, |t| bump(t, horizon), v_block);
    a.check(&v)?;
    let a_eps = a.mollified(&kernel, time)?;
    let dim = a.dim();
    let m = cfg.m();

    let para = ParaSchedule::new(a, m)?;
    let para_eps = ParaSchedule::new(&a_eps, m)?;
    let n_upper = dim * (dim + 1) / 2;
    let (diff_sup, dadt) = match (a, &a_eps) {
        (CoefficientSchedule::Sampled(_), CoefficientSchedule::Sampled(_)) => {
            let mut diff_sup = T::zero();
            let mut fields = Vec::with_capacity(n_upper);
            for e in 0..n_upper {
                let (j, k) = upper_index(dim, e);
                let raw = a.entry_field(j, k, time);
                let smooth = a_eps.entry_field(j, k, time);
                let d = smooth.sub(&raw).sup_per_slice().into_iter().fold(T::zero(), T::max);
                diff_sup = diff_sup.max(d);
                fields.push(smooth.time_derivative());
            }
            let dadt = (0..time.len())
                .into_par_iter()
                .map(|i| {
                    let upper: Vec<_> = fields.iter().map(|f| f.slice(i).clone()).collect();
                    ParaMatrix::from_entries(dim, &upper, m)
                })
                .collect::<Result<Vec<_>>>()?;
            (diff_sup, Some(dadt))
        }
        _ => (T::zero(), None),
    };
    let dadt_sup = dadt.as_ref().map_or(0.0, |_| {
        (0..n_upper)
            .map(|e| {
                let (j, k) = upper_index(dim, e);
                a_eps.entry_field(j, k, time).time_derivative().sup_per_slice().into_iter().fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max)
            .as_f64()
    });

    let dv_field = v.time_derivative();
    let half = horizon / T::lit(2.0);
    let weight = cfg.weight();
    let idx: Vec<usize> = (0..time.len())
        .filter(|&i| {
            time.time(i) <= half && (v.slice(i).max_abs() > T::zero() || dv_field.slice(i).max_abs() > T::zero())
        })
        .collect();

    let samples = idx
        .par_iter()
        .map(|&i| {
            let tt = time.time(i);
            let tau = gamma * (horizon - tt);
            let phi1 = weight.phi_inv(tau)?.as_f64();
            let phi2 = weight.second_fd(tau)?.as_f64();
            let vi = v.slice(i);
            let dvi = dv_field.slice(i);
            let w: Vec<_> = (0..dim).map(|j| vi.derivative(j)).collect();
            let dw: Vec<_> = (0..dim).map(|j| dvi.derivative(j)).collect();
            let p = para.at(i);
            let pe = para_eps.at(i);
            let b0 = p.divergence_form(vi);
            let b = b0.add(&vi.scale(T::lit(phi1)));
            let sum = dvi.add(&b);
            let b0_v = b0.inner(vi);
            let full = -2.0 * pairing(p, &w, &dw, false);
            let smooth = -2.0 * pairing(pe, &w, &dw, false);
            let deriv = dadt.as_ref().map_or(0.0, |d| pairing(&d[i], &w, &w, false));
            let adj = pairing(pe, &dw, &w, true);
            let wn = norms(&w);
            let dwn = norms(&dw);
            let cross: f64 = dwn.iter().flat_map(|x| wn.iter().map(move |y| x * y)).sum();
            Ok(Sample {
                i,
                t: tt.as_f64(),
                v: vi.l2_norm().as_f64(),
                grad: wn.iter().map(|x| x * x).sum::<f64>().sqrt(),
                b0: b0.l2_norm().as_f64(),
                b: b.l2_norm().as_f64(),
                dv: dvi.l2_norm().as_f64(),
                b0_v: (b0_v.re.as_f64(), b0_v.norm().as_f64()),
                flux_pairing: pairing(p, &w, &w, false),
                energy: (
                    sum.l2_norm().as_f64().powi(2),
                    dvi.l2_norm().as_f64().powi(2) + b.l2_norm().as_f64().powi(2),
                    2.0 * dvi.inner(&b).re.as_f64(),
                ),
                cross_b0: 2.0 * dvi.inner(&b0).re.as_f64(),
                spatial_parts: (full - smooth, smooth),
                time_parts: (deriv, adj),
                cross,
                phi1,
                phi2,
            })
        })
        .collect::<Result<Vec<Sample>>>()?;

    let lambda0 = a.lambda0().as_f64();
    let g = gamma.as_f64();
    let four_nu = 4f64.powi(nu);
    let mu = weight.modulus();
    let mu_eps = mu.eval(T::lit(eps)).as_f64();
    let mut rows = Vec::new();
    for s in samples.iter().filter(|s| s.v > 0.0) {
        let t = Some(s.t);
        let bv = s.b0 * s.v;
        rows.push(row("block_cauchy_schwarz", t, bv, s.b0_v.1, geq(bv, s.b0_v.1, bv)));
        let fp = s.flux_pairing.abs();
        rows.push(row("block_integration_by_parts", t, s.b0_v.1, fp, close(s.b0_v.1, fp, bv, IDENTITY_TOL)));
        let pos = 0.5 * lambda0 * s.grad * s.grad;
        rows.push(row("block_positivity", t, -s.b0_v.0, pos, geq(-s.b0_v.0, pos, bv)));
        if nu >= 1 {
            let lo = block_annulus(nu).0 * s.v;
            rows.push(row("lower_frequency", t, s.grad, lo, geq(s.grad, lo, s.grad)));
            let freq = lambda0 / 8.0 * four_nu * s.v * s.v;
            rows.push(row("block_frequency", t, pos, freq, geq(pos, freq, pos)));
            let post = lambda0 / 8.0 * four_nu * s.v;
            rows.push(row("block_lower_bound", t, s.b0, post, geq(s.b0, post, s.b0)));
        }
        let (lhs, sq, crs) = s.energy;
        rows.push(row("energy_identity", t, lhs, sq + crs, close(lhs, sq + crs, sq, IDENTITY_TOL)));
        if nu >= 1 {
            let cut = lambda0 / 16.0 * four_nu;
            if s.phi1 <= cut {
                let gap = s.b0 - s.phi1 * s.v;
                rows.push(row("small_branch", t, gap, cut * s.v, geq(gap, cut * s.v, s.b0)));
            } else {
                let need = cut * cut * mu_eps;
                rows.push(row("big_branch", t, s.phi2, need, s.phi2 >= need));
            }
        }
    }

    let wsum = |f: &dyn Fn(&Sample) -> f64| -> f64 { samples.iter().map(|s| time.trapezoid(s.i).as_f64() * f(s)).sum() };
    let x_direct = wsum(&|s| s.cross_b0);
    let x1 = wsum(&|s| s.spatial_parts.0);
    let x2 = wsum(&|s| s.spatial_parts.1);
    let scale_x = wsum(&|s| 2.0 * s.dv * s.b0);
    rows.push(row("split_identity", None, x_direct, x1 + x2, close(x_direct, x1 + x2, scale_x, IDENTITY_TOL)));
    let deriv = wsum(&|s| s.time_parts.0);
    let adj = wsum(&|s| s.time_parts.1);
    rows.push(row("time_parts_identity", None, x2, deriv + adj, close(x2, deriv + adj, scale_x, DISCRETE_TOL)));

    let v2 = wsum(&|s| s.v * s.v);
    let cross = wsum(&|s| s.cross);
    let bound1 = 2.0 * mu_eps * cross;
    let bound2 = 4f64.powi(nu + 1) * mu_eps / eps * v2;
    let mut constants = BTreeMap::new();
    constants.insert("mollification_c_diff".to_string(), diff_sup.as_f64() / mu_eps);
    constants.insert("mollification_c_derivative".to_string(), dadt_sup * eps / mu_eps);
    rows.push(row("split_difference_bound", None, x1.abs(), bound1, x1.is_finite()));
    constants.insert("split_difference_c".to_string(), ratio(x1.abs(), bound1));
    rows.push(row("derivative_term_bound", None, deriv.abs(), bound2, deriv.is_finite()));
    constants.insert("derivative_term_c".to_string(), ratio(deriv.abs(), bound2));
    rows.push(row("adjoint_term_bound", None, adj.abs(), bound1, adj.is_finite()));
    constants.insert("adjoint_term_c".to_string(), ratio(adj.abs(), bound1));

    let e_lhs = wsum(&|s| s.energy.0);
    let e_rhs = wsum(&|s| s.dv * s.dv + s.b * s.b + g * s.phi2 * s.v * s.v) + x_direct;
    rows.push(row("energy_expansion", None, e_lhs, e_rhs, close(e_lhs, e_rhs, e_rhs, DISCRETE_TOL)));

    let base = wsum(&|s| s.b * s.b + g * s.phi2 * s.v * s.v);
    let d = (16f64.powi(nu + 1) * mu_eps + 4f64.powi(nu + 1) * mu_eps / eps) * v2;
    let c_req = if d > 0.0 { ((base - e_lhs) / d).max(0.0) } else { 0.0 };
    constants.insert("absorption_c_required".to_string(), c_req);
    rows.push(row("energy_absorption", None, e_lhs, base - c_req * d, c_req.is_finite()));

    let floor = 0.5 * g * v2;
    if nu == 0 {
        rows.push(row("low_block_bound", None, e_lhs, floor, e_lhs >= floor));
    } else {
        let c = if v2 > 0.0 { (e_lhs - floor) / (g.sqrt() * four_nu * v2) } else { 0.0 };
        constants.insert("block_bound_c".to_string(), c);
        rows.push(row("block_bound", None, e_lhs, floor, c > 0.0 || v2 == 0.0));
    }

    Ok(ProofLedger { nu, gamma: g, epsilon: eps, lambda0, rows, constants })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

fn upper_index(dim: usize, e: usize) -> (usize, usize) {
    let mut e = e;
    for j in 0..dim {
        let row = dim - j;
        if e < row {
            return (j, j + e);
        }
        e -= row;
    }
    unreachable!("upper index out of range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_layout() {
        assert_eq!(upper_index(2, 0), (0, 0));
        assert_eq!(upper_index(2, 1), (0, 1));
        assert_eq!(upper_index(2, 2), (1, 1));
        assert_eq!(upper_index(1, 0), (0, 0));
    }
}
