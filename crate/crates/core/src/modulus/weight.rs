use std::fmt::Write as _;

use serde::Serialize;

use super::{default_deltas, osgood_verdict, validate_modulus, MonotoneHermite, Modulus, OsgoodVerdict};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, gauss_legendre5};
use crate::scalar::Real;

/// Knobs of the weight tabulation.
#[derive(Debug, Clone, Copy)]
pub struct WeightOptions<T> {
    /// Spacing of the geometric abscissae `t_i = exp(i * log_step)`.
    pub log_step: T,
    /// Relative tolerance of each per-knot quadrature.
    pub tol: T,
}

impl<T: Real> Default for WeightOptions<T> {
    fn default() -> Self {
        Self { log_step: T::lit(1.0 / 1024.0), tol: T::lit(1e-12) }
    }
}

/// Extra knots past `tau_max` so centered differences stay inside the table.
const MARGIN_KNOTS: usize = 8;

/// Tabulated Carleman weight.
///
/// `phi(t) = ∫_{1/t}^1 ds / mu(s)` is tabulated on `t_i = exp(i * log_step)`.
/// Its inverse is held as a monotone Hermite interpolant of `ln t` against
/// `phi`, with knot slopes `d ln t / d phi = t mu(1/t)`. `Phi' = phi^{-1}` and
/// `Phi = ∫_0^tau phi^{-1}` is accumulated knot by knot with Gauss-Legendre.
#[derive(Debug, Clone)]
pub struct CarlemanWeight<T: Real> {
    mu: Modulus<T>,
    tau_max: T,
    tol: T,
    log_t: MonotoneHermite<T>,
    cumulative: Vec<T>,
}

impl<T: Real> CarlemanWeight<T> {
    /// Builds the weight table on `[0, tau_max]`.
    ///
    /// Fails for invalid moduli, for moduli the Osgood heuristic classifies as
    /// convergent (then `phi` saturates at a finite supremum) and when the table
    /// would leave the floating-point range before reaching `tau_max`.
    pub fn build(mu: &Modulus<T>, tau_max: T, tol: T) -> Result<Self> {
        Self::build_with(mu, tau_max, WeightOptions { tol, ..WeightOptions::default() })
    }

    pub fn build_with(mu: &Modulus<T>, tau_max: T, opts: WeightOptions<T>) -> Result<Self> {
        if !(tau_max > T::zero() && tau_max.is_finite()) {
            return Err(Error::Domain(format!("tau_max = {tau_max} must be positive")));
        }
        let report = validate_modulus(mu)?;
        if !report.pass {
            return Err(Error::InvalidModulus(mu.name().to_string()));
        }
        let verdict = osgood_verdict(mu, &default_deltas::<T>())?.verdict;

        // ln t must keep t, Phi and tau * t finite.
        let cap = T::lit(0.985) * T::max_value().ln();
        if verdict == OsgoodVerdict::Converges {
            let sup_phi = super::osgood_tail(mu, (-cap).exp(), opts.tol)?;
            return Err(Error::WeightDomainExhausted { sup_phi: sup_phi.as_f64(), tau_max: tau_max.as_f64() });
        }
        let step = opts.log_step;
        let g = |x: T| {
            let s = (-x).exp();
            s / mu.eval(s)
        };
        let mut phi = vec![T::zero()];
        let mut log_t = vec![T::zero()];
        let mut slopes = vec![mu.growth(T::one())];
        let mut past = 0usize;
        let mut i = 0usize;
        loop {
            let x0 = T::from_usize_lossy(i) * step;
            let x1 = T::from_usize_lossy(i + 1) * step;
            if x1 > cap {
                break;
            }
            let rough = gauss_legendre5(&g, x0, x1);
            let piece = adaptive_simpson(&g, x0, x1, (opts.tol * rough.abs()).max(T::min_positive_value()));
            let next = phi[i] + piece;
            if !next.is_finite() {
                return Err(Error::Evaluation { name: mu.name().to_string(), at: (-x1).exp().as_f64() });
            }
            phi.push(next);
            log_t.push(x1);
            slopes.push(mu.growth(x1.exp()));
            i += 1;
            if next >= tau_max {
                past += 1;
                if past > MARGIN_KNOTS {
                    break;
                }
            }
        }
        let reached = *phi.last().expect("table has a knot");
        if reached < tau_max || past <= MARGIN_KNOTS {
            return Err(Error::WeightRange { reached: reached.as_f64(), tau_max: tau_max.as_f64() });
        }

        let log_t = MonotoneHermite::new(phi, log_t, slopes);
        let knots = log_t.knots();
        let mut cumulative = Vec::with_capacity(knots.len());
        cumulative.push(T::zero());
        for k in 0..knots.len() - 1 {
            let f = |tau: T| log_t.eval_in(k, tau).exp();
            let last = cumulative[k];
            cumulative.push(last + gauss_legendre5(&f, knots[k], knots[k + 1]));
        }
        Ok(Self { mu: mu.clone(), tau_max, tol: opts.tol, log_t, cumulative })
    }

    pub fn modulus(&self) -> &Modulus<T> {
        &self.mu
    }

    pub fn tau_max(&self) -> T {
        self.tau_max
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    /// Upper end of the tabulated `tau` range (slightly past `tau_max`).
    pub fn table_end(&self) -> T {
        *self.log_t.knots().last().expect("nonempty")
    }

    pub fn knot_count(&self) -> usize {
        self.log_t.knots().len()
    }

    /// Table abscissae `t_i` paired with `phi(t_i)`.
    pub fn phi_table(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.log_t.values().iter().zip(self.log_t.knots()).map(|(&lt, &p)| (lt.exp(), p))
    }

    fn check(&self, tau: T) -> Result<()> {
        if tau >= T::zero() && tau <= self.table_end() {
            Ok(())
        } else {
            Err(Error::Domain(format!("tau = {tau} outside weight table [0, {}]", self.table_end())))
        }
    }

    /// Local knot spacing around `tau`.
    pub fn spacing(&self, tau: T) -> T {
        let k = self.log_t.knots();
        let i = self.log_t.locate(tau);
        k[i + 1] - k[i]
    }

    /// `ln Phi'(tau) = ln phi^{-1}(tau)`.
    pub fn log_phi_inv(&self, tau: T) -> Result<T> {
        self.check(tau)?;
        Ok(self.log_t.eval(tau))
    }

    /// `phi^{-1}(tau) = Phi'(tau)`.
    pub fn phi_inv(&self, tau: T) -> Result<T> {
        self.log_phi_inv(tau).map(T::exp)
    }

    /// `phi(t)` for `t >= 1`, by quadrature from the nearest knot below.
    pub fn phi(&self, t: T) -> Result<T> {
        if t < T::one() {
            return Err(Error::Domain(format!("phi is defined for t >= 1, got {t}")));
        }
        let lt = t.ln();
        let vals = self.log_t.values();
        let i = vals.partition_point(|&v| v <= lt).saturating_sub(1);
        if i + 1 >= vals.len() {
            return Err(Error::Domain(format!("t = {t} beyond weight table")));
        }
        let g = |x: T| {
            let s = (-x).exp();
            s / self.mu.eval(s)
        };
        let base = self.log_t.knots()[i];
        if lt == vals[i] {
            return Ok(base);
        }
        let rough = gauss_legendre5(&g, vals[i], lt);
        Ok(base + adaptive_simpson(&g, vals[i], lt, (self.tol * rough.abs()).max(T::min_positive_value())))
    }

    /// `Phi(tau) = ∫_0^tau phi^{-1}(s) ds`.
    pub fn big_phi(&self, tau: T) -> Result<T> {
        self.check(tau)?;
        let i = self.log_t.locate(tau);
        let k0 = self.log_t.knots()[i];
        let f = |s: T| self.log_t.eval_in(i, s).exp();
        Ok(self.cumulative[i] + gauss_legendre5(&f, k0, tau))
    }

    /// Ratio `Phi''(tau) / Phi'(tau)` by a second-order difference of `Phi'`
    /// with step equal to the local knot spacing (one-sided near `tau = 0`).
    pub fn second_over_first_fd(&self, tau: T) -> Result<T> {
        self.check(tau)?;
        let h = self.spacing(tau);
        let two = T::lit(2.0);
        if tau + two * h > self.table_end() {
            return Err(Error::Domain(format!("tau = {tau} too close to the table end")));
        }
        let l0 = self.log_t.eval(tau);
        let rel = |x: T| (self.log_t.eval(x) - l0).exp();
        if tau - h >= T::zero() {
            Ok((rel(tau + h) - rel(tau - h)) / (two * h))
        } else {
            Ok((T::lit(-3.0) + T::lit(4.0) * rel(tau + h) - rel(tau + two * h)) / (two * h))
        }
    }

    /// `ln Phi''(tau)` from the finite-difference ratio.
    pub fn log_second_fd(&self, tau: T) -> Result<T> {
        Ok(self.log_phi_inv(tau)? + self.second_over_first_fd(tau)?.ln())
    }

    /// `Phi''(tau)` by centered differences of `Phi'` (may overflow to infinity).
    pub fn second_fd(&self, tau: T) -> Result<T> {
        self.log_second_fd(tau).map(T::exp)
    }

    /// `Phi'(tau)` by centered differences of `Phi` with the local knot spacing.
    pub fn first_fd(&self, tau: T) -> Result<T> {
        self.check(tau)?;
        let h = self.spacing(tau);
        let two = T::lit(2.0);
        if tau - h >= T::zero() {
            Ok((self.big_phi(tau + h)? - self.big_phi(tau - h)?) / (two * h))
        } else {
            let (f0, f1, f2) = (self.big_phi(tau)?, self.big_phi(tau + h)?, self.big_phi(tau + two * h)?);
            Ok((T::lit(-3.0) * f0 + T::lit(4.0) * f1 - f2) / (two * h))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeCheck {
    /// `max |Phi'' - Phi'^2 mu(1/Phi')| / Phi''` over the grid.
    pub max_residual: f64,
    /// `ln Phi''` at each grid point.
    pub log_second: Vec<f64>,
    /// Whether `Phi''` is nondecreasing along the grid.
    pub nondecreasing: bool,
    pub within_tol: bool,
}

/// Residual of `Phi'' = Phi'^2 mu(1/Phi')` along `tau_grid`.
///
/// Both sides are divided by `Phi'` before comparing so nothing overflows:
/// the left side becomes the finite-difference ratio `Phi''/Phi'`, the right
/// side `sigma mu(1/sigma)` at `sigma = Phi'`.
pub fn check_weight_ode<T: Real>(w: &CarlemanWeight<T>, tau_grid: &[T], tol: T) -> Result<OdeCheck> {
    let mut max_residual = T::zero();
    let mut log_second = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        let lhs = w.second_over_first_fd(tau)?;
        let sigma = w.phi_inv(tau)?;
        let rhs = w.modulus().growth(sigma);
        let r = ((lhs - rhs) / lhs).abs();
        if r > max_residual || r.is_nan() {
            max_residual = r;
        }
        log_second.push((w.log_phi_inv(tau)? + lhs.ln()).as_f64());
    }
    let nondecreasing = log_second.windows(2).all(|p| p[1] >= p[0] - 1e-12);
    Ok(OdeCheck {
        max_residual: max_residual.as_f64(),
        log_second,
        nondecreasing,
        within_tol: max_residual <= tol,
    })
}

/// CSV table with columns `tau,phi_inv,Phi,Phi_prime,Phi_second`.
///
/// `phi_inv` comes from the interpolated inverse, `Phi_prime` and
/// `Phi_second` from centered differences of `Phi` and `Phi'`.
pub fn weight_table_csv<T: Real>(w: &CarlemanWeight<T>, taus: &[T]) -> Result<String> {
    let mut out = String::from("tau,phi_inv,Phi,Phi_prime,Phi_second\n");
    for &tau in taus {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            tau.as_f64(),
            w.phi_inv(tau)?.as_f64(),
            w.big_phi(tau)?.as_f64(),
            w.first_fd(tau)?.as_f64(),
            w.second_fd(tau)?.as_f64()
        );
    }
    Ok(out)
}
