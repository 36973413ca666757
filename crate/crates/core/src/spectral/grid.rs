use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

struct Plans<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    forward_padded: Arc<dyn Fft<T>>,
    inverse_padded: Arc<dyn Fft<T>>,
}

/// Uniform grid on `[0, 2π)^dim` with `n` points per axis.
///
/// FFT plans (for `n` and for the `2n` dealiasing grid) are built once and
/// shared read-only by every clone of the grid.
#[derive(Clone)]
pub struct TorusGrid<T: Real> {
    dim: usize,
    n: usize,
    plans: Arc<Plans<T>>,
}

impl<T: Real> fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl<T: Real> PartialEq for TorusGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl<T: Real> TorusGrid<T> {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Config(format!("dim = {dim}, expected 1 or 2")));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!("points per axis = {n}, expected a power of two >= 2")));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            forward_padded: planner.plan_fft_forward(2 * n),
            inverse_padded: planner.plan_fft_inverse(2 * n),
        };
        Ok(Self { dim, n, plans: Arc::new(plans) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        T::TAU() / T::from_usize_lossy(self.n)
    }

    /// Cell volume `(2π/n)^dim`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }

    /// Torus volume `(2π)^dim`.
    pub fn volume(&self) -> T {
        T::TAU().powi(self.dim as i32)
    }

    /// Largest dyadic index, `ceil(log2(n sqrt(dim))) + 1`; `S_{k_max}` is the
    /// identity on grid functions.
    pub fn k_max(&self) -> i32 {
        let r = (self.n as f64 * (self.dim as f64).sqrt()).log2();
        r.ceil() as i32 + 1
    }

    /// Signed wavenumber of FFT index `i` on an axis of length `len`.
    #[inline]
    pub(crate) fn wavenumber(i: usize, len: usize) -> i64 {
        if i < len / 2 {
            i as i64
        } else {
            i as i64 - len as i64
        }
    }

    /// Integer frequency `xi` of flat coefficient index `idx` (row-major; the
    /// second component is 0 in one dimension).
    #[inline]
    pub fn xi(&self, idx: usize) -> [i64; 2] {
        match self.dim {
            1 => [Self::wavenumber(idx, self.n), 0],
            _ => [Self::wavenumber(idx / self.n, self.n), Self::wavenumber(idx % self.n, self.n)],
        }
    }

    #[inline]
    pub fn xi_norm(&self, idx: usize) -> T {
        let [a, b] = self.xi(idx);
        T::from_i64((a * a + b * b) as i64).expect("small integer").sqrt()
    }

    /// Flat index of frequency `xi`, if it lies on the lattice `[-n/2, n/2)^dim`.
    pub fn index_of(&self, xi: [i64; 2]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let wrap = |k: i64| -> Option<usize> {
            if k < -half || k >= half {
                None
            } else {
                Some(k.rem_euclid(self.n as i64) as usize)
            }
        };
        match self.dim {
            1 => (xi[1] == 0).then(|| wrap(xi[0])).flatten(),
            _ => Some(wrap(xi[0])? * self.n + wrap(xi[1])?),
        }
    }

    /// Node coordinates of flat sample index `idx`.
    pub fn node(&self, idx: usize) -> [T; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [h * T::from_usize_lossy(idx), T::zero()],
            _ => [h * T::from_usize_lossy(idx / self.n), h * T::from_usize_lossy(idx % self.n)],
        }
    }

    /// Samples -> coefficients, normalized by `n^dim`.
    pub(crate) fn forward(&self, buf: &mut [Cplx<T>]) {
        nd_transform(buf, self.n, self.dim, &*self.plans.forward);
        let scale = T::from_usize_lossy(self.len()).recip();
        buf.iter_mut().for_each(|c| *c = *c * scale);
    }

    /// Coefficients -> samples.
    pub(crate) fn inverse(&self, buf: &mut [Cplx<T>]) {
        nd_transform(buf, self.n, self.dim, &*self.plans.inverse);
    }

    pub(crate) fn padded_len(&self) -> usize {
        (2 * self.n).pow(self.dim as u32)
    }

    /// Coefficients on the lattice -> samples of the same trigonometric
    /// polynomial on the `2n` grid.
    pub(crate) fn pad_to_samples(&self, coeffs: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let m = 2 * self.n;
        let mut buf = vec![Cplx::new(T::zero(), T::zero()); self.padded_len()];
        for (idx, c) in coeffs.iter().enumerate() {
            buf[self.padded_index(idx, m)] = *c;
        }
        nd_transform(&mut buf, m, self.dim, &*self.plans.inverse_padded);
        buf
    }

    /// Samples on the `2n` grid -> lattice coefficients (modes outside the
    /// lattice are dropped).
    pub(crate) fn truncate_from_samples(&self, mut buf: Vec<Cplx<T>>) -> Vec<Cplx<T>> {
        let m = 2 * self.n;
        nd_transform(&mut buf, m, self.dim, &*self.plans.forward_padded);
        let scale = T::from_usize_lossy(self.padded_len()).recip();
        (0..self.len()).map(|idx| buf[self.padded_index(idx, m)] * scale).collect()
    }

    #[inline]
    fn padded_index(&self, idx: usize, m: usize) -> usize {
        let [a, b] = self.xi(idx);
        let w = |k: i64| k.rem_euclid(m as i64) as usize;
        match self.dim {
            1 => w(a),
            _ => w(a) * m + w(b),
        }
    }
}

fn nd_transform<T: Real>(buf: &mut [Cplx<T>], n: usize, dim: usize, fft: &dyn Fft<T>) {
    match dim {
        1 => fft.process(buf),
        _ => {
            fft.process(buf);
            transpose(buf, n);
            fft.process(buf);
            transpose(buf, n);
        }
    }
}

fn transpose<T: Copy>(buf: &mut [T], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_max_covers_lattice() {
        for (dim, n) in [(1, 8), (1, 256), (2, 16), (2, 64)] {
            let g = TorusGrid::<f64>::new(dim, n).unwrap();
            let s = 2f64.powi(-g.k_max());
            let worst = (0..g.len()).map(|i| g.xi_norm(i)).fold(0.0, f64::max);
            assert!(worst * s <= 1.1, "dim {dim} n {n}");
        }
        assert_eq!(TorusGrid::<f64>::new(1, 256).unwrap().k_max(), 9);
        assert_eq!(TorusGrid::<f64>::new(2, 64).unwrap().k_max(), 8);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::<f64>::new(3, 8).is_err());
        assert!(TorusGrid::<f64>::new(1, 12).is_err());
    }

    #[test]
    fn lattice_indexing_round_trips() {
        let g = TorusGrid::<f64>::new(2, 8).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.index_of(g.xi(idx)), Some(idx));
        }
        assert_eq!(g.index_of([4, 0]), None);
        assert!(g.index_of([-4, 3]).is_some());
    }
}
