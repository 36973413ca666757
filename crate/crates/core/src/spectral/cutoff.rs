use crate::scalar::Real;

/// Inner edge of the transition band: `chi = 1` on `|s| <= 11/10`.
pub const PLATEAU: f64 = 1.1;
/// Outer edge: `chi = 0` on `|s| >= 19/10`.
pub const SUPPORT: f64 = 1.9;

#[inline]
fn glue<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-x.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth even cutoff, 1 on `[-1.1, 1.1]`, 0 outside `(-1.9, 1.9)`, with the
/// bridge `g(q) / (g(q) + g(1-q))`, `q = (1.9 - |s|) / 0.8`, `g(x) = e^{-1/x}`.
pub fn chi<T: Real>(s: T) -> T {
    let a = s.abs();
    let (lo, hi) = (T::lit(PLATEAU), T::lit(SUPPORT));
    if a <= lo {
        T::one()
    } else if a >= hi {
        T::zero()
    } else {
        let q = (hi - a) / (hi - lo);
        let gq = glue(q);
        gq / (gq + glue(T::one() - q))
    }
}

/// Symbol of `S_k`: `chi(2^{-k} |xi|)`, and 0 for `k < 0` (`S_{-1} = 0`).
#[inline]
pub fn low_pass_symbol<T: Real>(k: i32, xi_norm: T) -> T {
    if k < 0 {
        T::zero()
    } else {
        chi(xi_norm * T::lit(2f64.powi(-k)))
    }
}

/// Symbol of `Δ_k = S_k - S_{k-1}` (and `Δ_0 = S_0`).
#[inline]
pub fn block_symbol<T: Real>(k: i32, xi_norm: T) -> T {
    if k < 0 {
        T::zero()
    } else {
        low_pass_symbol(k, xi_norm) - low_pass_symbol(k - 1, xi_norm)
    }
}
