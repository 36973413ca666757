use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

use super::TorusGrid;

/// Grid function on the torus together with its Fourier coefficients.
///
/// `coeffs[idx]` is `(1/n^dim) Σ_x u(x) e^{-i xi·x}` at the frequency
/// `grid.xi(idx)`; both arrays are kept consistent by every constructor.
#[derive(Debug, Clone)]
pub struct SpectralField<T: Real> {
    grid: TorusGrid<T>,
    samples: Vec<Cplx<T>>,
    coeffs: Vec<Cplx<T>>,
}

#[inline]
fn czero<T: Real>() -> Cplx<T> {
    Cplx::new(T::zero(), T::zero())
}

impl<T: Real> SpectralField<T> {
    pub fn from_samples(grid: &TorusGrid<T>, samples: Vec<Cplx<T>>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for {} nodes", samples.len(), grid.len())));
        }
        let mut coeffs = samples.clone();
        grid.forward(&mut coeffs);
        Ok(Self { grid: grid.clone(), samples, coeffs })
    }

    pub fn from_coeffs(grid: &TorusGrid<T>, coeffs: Vec<Cplx<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", coeffs.len(), grid.len())));
        }
        let mut samples = coeffs.clone();
        grid.inverse(&mut samples);
        Ok(Self { grid: grid.clone(), samples, coeffs })
    }

    pub fn from_fn(grid: &TorusGrid<T>, f: impl Fn([T; 2]) -> Cplx<T>) -> Self {
        let samples = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::from_samples(grid, samples).expect("length matches grid")
    }

    pub fn from_real_fn(grid: &TorusGrid<T>, f: impl Fn([T; 2]) -> T) -> Self {
        Self::from_fn(grid, |x| Cplx::new(f(x), T::zero()))
    }

    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        Self { grid: grid.clone(), samples: vec![czero(); grid.len()], coeffs: vec![czero(); grid.len()] }
    }

    pub fn constant(grid: &TorusGrid<T>, c: Cplx<T>) -> Self {
        let mut coeffs = vec![czero(); grid.len()];
        coeffs[0] = c;
        Self { grid: grid.clone(), samples: vec![c; grid.len()], coeffs }
    }

    /// Single Fourier mode `e^{i xi·x}`.
    pub fn mode(grid: &TorusGrid<T>, xi: [i64; 2]) -> Result<Self> {
        let idx = grid
            .index_of(xi)
            .ok_or_else(|| Error::Domain(format!("frequency {xi:?} not on the lattice")))?;
        let mut coeffs = vec![czero(); grid.len()];
        coeffs[idx] = Cplx::new(T::one(), T::zero());
        Self::from_coeffs(grid, coeffs)
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[Cplx<T>] {
        &self.samples
    }

    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, xi: [i64; 2]) -> Cplx<T> {
        self.grid.index_of(xi).map_or_else(czero, |i| self.coeffs[i])
    }

    pub(crate) fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Self {
        assert!(self.grid == other.grid, "fields live on different grids");
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Panics if the grids differ; use [`SpectralField::try_add`] at API boundaries.
    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(self.add(other))
    }

    pub fn scale(&self, c: T) -> Self {
        self.scale_complex(Cplx::new(c, T::zero()))
    }

    pub fn scale_complex(&self, c: Cplx<T>) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| *v * c).collect(),
            coeffs: self.coeffs.iter().map(|v| *v * c).collect(),
        }
    }

    /// `Σ w_i f_i` over fields on one grid; both representations are combined
    /// directly, so no transform is needed.
    pub fn linear_combination(grid: &TorusGrid<T>, terms: &[(T, &Self)]) -> Self {
        let mut out = Self::zeros(grid);
        for (w, f) in terms {
            assert!(f.grid == *grid, "fields live on different grids");
            out.samples.iter_mut().zip(&f.samples).for_each(|(o, v)| *o = *o + *v * *w);
            out.coeffs.iter_mut().zip(&f.coeffs).for_each(|(o, v)| *o = *o + *v * *w);
        }
        out
    }

    /// Fourier multiplier with real symbol `m(xi, |xi|)`.
    pub fn multiplier(&self, m: impl Fn([i64; 2], T) -> T) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| *c * m(self.grid.xi(i), self.grid.xi_norm(i)))
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("same grid")
    }

    /// Spectral derivative `∂_{x_axis}`: multiplies coefficients by `i xi_axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.grid.dim(), "axis {axis} out of range");
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = T::from_i64(self.grid.xi(i)[axis]).expect("small integer");
                Cplx::new(-c.im * k, c.re * k)
            })
            .collect();
        Self::from_coeffs(&self.grid, coeffs).expect("same grid")
    }

    /// Samples of this field on the `2n` grid (zero-padded spectrum).
    pub fn padded_samples(&self) -> Vec<Cplx<T>> {
        self.grid.pad_to_samples(&self.coeffs)
    }

    /// Field whose coefficients are the lattice part of the given `2n`-grid samples.
    pub fn from_padded_samples(grid: &TorusGrid<T>, padded: Vec<Cplx<T>>) -> Self {
        assert_eq!(padded.len(), grid.padded_len(), "padded buffer length");
        Self::from_coeffs(grid, grid.truncate_from_samples(padded)).expect("lattice length")
    }

    /// Dealiased product: both factors are zero-padded to `2n` per axis,
    /// multiplied nodewise and truncated back to the lattice. The lattice
    /// coefficients of the result are the exact convolution sums.
    pub fn product(&self, other: &Self) -> Self {
        assert!(self.grid == other.grid, "fields live on different grids");
        let mut a = self.padded_samples();
        let b = other.padded_samples();
        a.iter_mut().zip(&b).for_each(|(x, y)| *x = *x * *y);
        Self::from_padded_samples(&self.grid, a)
    }

    /// `<u, v> = (2π/n)^dim Σ_nodes u conj(v)`.
    pub fn inner(&self, other: &Self) -> Cplx<T> {
        assert!(self.grid == other.grid, "fields live on different grids");
        let s: Cplx<T> = self
            .samples
            .iter()
            .zip(&other.samples)
            .fold(czero(), |acc, (a, b)| acc + *a * b.conj());
        s * self.grid.cell_volume()
    }

    /// `L²` norm from the nodes, `((2π/n)^dim Σ |u|²)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let s: T = self.samples.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// `L²` norm from the coefficients, `((2π)^dim Σ |û|²)^{1/2}`.
    pub fn l2_norm_spectral(&self) -> T {
        let s: T = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s * self.grid.volume()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    pub fn max_coeff(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    pub fn max_imag(&self) -> T {
        self.samples.iter().map(|c| c.im.abs()).fold(T::zero(), T::max)
    }

    /// Drops the imaginary part of the samples.
    pub fn real_part(&self) -> Self {
        let samples = self.samples.iter().map(|c| Cplx::new(c.re, T::zero())).collect();
        Self::from_samples(&self.grid, samples).expect("same grid")
    }

    /// Largest coefficient difference relative to the larger of the two
    /// coefficient maxima (0 when both fields vanish).
    pub fn relative_coeff_distance(&self, other: &Self) -> T {
        let scale = self.max_coeff().max(other.max_coeff());
        let d = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max);
        if scale == T::zero() {
            d
        } else {
            d / scale
        }
    }
}
