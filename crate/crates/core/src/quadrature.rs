//! One-dimensional quadrature rules shared by the weight construction and the
//! mollifier normalization.

use crate::scalar::Real;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let m = (a + b) / two;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / six * (fa + T::lit(4.0) * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    let m = (a + b) / two;
    let lm = (a + m) / two;
    let rm = (m + b) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / two, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / two, depth - 1)
}

/// Adaptive Simpson over `[a, b]` split into `pieces` geometric subintervals,
/// each integrated to `rel_tol * |estimate| / pieces`. Requires `0 < a < b`.
pub fn geometric_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, pieces: usize, rel_tol: T) -> T {
    let pieces = pieces.max(1);
    let ratio = (b / a).powf(T::one() / T::from_usize_lossy(pieces));
    let mut edges = Vec::with_capacity(pieces + 1);
    let mut x = a;
    edges.push(a);
    for _ in 1..pieces {
        x = x * ratio;
        edges.push(x);
    }
    edges.push(b);
    // Coarse pass fixes the absolute scale of the requested relative error.
    let coarse: T = edges.windows(2).map(|w| gauss_legendre5(f, w[0], w[1])).sum();
    let per_piece = (rel_tol * coarse.abs() / T::from_usize_lossy(pieces)).max(T::min_positive_value());
    edges
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], per_piece))
        .sum()
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre5<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&x, &w)| T::lit(w) * f(mid + half * T::lit(x)))
        .sum::<T>()
        * half
}
