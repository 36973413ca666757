use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use crate::spectral::{SpectralField, TorusGrid};

/// Symmetric `dim × dim` matrix of real coefficient fields with a pointwise
/// ellipticity floor `lambda0`. Only the upper triangle is stored.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix<T: Real> {
    dim: usize,
    upper: Vec<SpectralField<T>>,
    lambda0: T,
}

fn upper_index(dim: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    j * dim - j * (j + 1) / 2 + k
}

impl<T: Real> CoefficientMatrix<T> {
    /// Entries in row-major upper-triangle order: `a00` (1D) or
    /// `a00, a01, a11` (2D).
    pub fn from_upper(upper: Vec<SpectralField<T>>, lambda0: T) -> Result<Self> {
        let first = upper.first().ok_or_else(|| Error::Config("empty coefficient matrix".into()))?;
        let dim = first.grid().dim();
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(Error::Config(format!("{} entries for a {dim}x{dim} symmetric matrix", upper.len())));
        }
        for a in &upper {
            first.ensure_same_grid(a)?;
            let tol = T::lit(1e-12) * a.max_abs().max(T::one());
            if a.max_imag() > tol {
                return Err(Error::Domain(format!("coefficient is not real (max |Im| = {})", a.max_imag())));
            }
        }
        if !(lambda0 > T::zero() && lambda0 <= T::one()) {
            return Err(Error::Config(format!("lambda0 = {lambda0} outside (0, 1]")));
        }
        let out = Self { dim, upper, lambda0 };
        let floor = out.min_eigenvalue();
        if floor < lambda0 * (T::one() - T::lit(1e-12)) {
            return Err(Error::Domain(format!("smallest eigenvalue {floor} below lambda0 = {lambda0}")));
        }
        Ok(out)
    }

    pub fn identity(grid: &TorusGrid<T>) -> Self {
        Self::scalar(&SpectralField::constant(grid, Cplx::new(T::one(), T::zero())), T::one())
            .expect("identity is elliptic")
    }

    /// `a δ_jk`.
    pub fn scalar(a: &SpectralField<T>, lambda0: T) -> Result<Self> {
        let zero = SpectralField::zeros(a.grid());
        let upper = match a.grid().dim() {
            1 => vec![a.clone()],
            _ => vec![a.clone(), zero, a.clone()],
        };
        Self::from_upper(upper, lambda0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda0(&self) -> T {
        self.lambda0
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.upper[0].grid()
    }

    /// `a_{jk}` (equal to `a_{kj}` by storage).
    pub fn entry(&self, j: usize, k: usize) -> &SpectralField<T> {
        assert!(j < self.dim && k < self.dim, "entry ({j}, {k}) out of range");
        &self.upper[upper_index(self.dim, j, k)]
    }

    pub fn entries_upper(&self) -> &[SpectralField<T>] {
        &self.upper
    }

    /// Smallest eigenvalue over all nodes (real parts of the samples).
    pub fn min_eigenvalue(&self) -> T {
        let n = self.grid().len();
        let two = T::lit(2.0);
        (0..n)
            .map(|i| match self.dim {
                1 => self.upper[0].samples()[i].re,
                _ => {
                    let (a, b, c) =
                        (self.upper[0].samples()[i].re, self.upper[1].samples()[i].re, self.upper[2].samples()[i].re);
                    let mean = (a + c) / two;
                    let half = (a - c) / two;
                    mean - (half * half + b * b).sqrt()
                }
            })
            .fold(T::infinity(), T::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_storage_and_floor() {
        let g = TorusGrid::<f64>::new(2, 16).unwrap();
        let a = SpectralField::from_real_fn(&g, |x| 2.0 + x[0].sin());
        let b = SpectralField::from_real_fn(&g, |x| 0.5 * x[1].cos());
        let c = SpectralField::constant(&g, Cplx::new(2.0, 0.0));
        let m = CoefficientMatrix::from_upper(vec![a, b, c], 0.4).unwrap();
        assert!(std::ptr::eq(m.entry(0, 1), m.entry(1, 0)));
        // min of (a+c)/2 - sqrt(((a-c)/2)^2 + b^2) is at sin x = -1, cos y = ±1.
        let expect = 1.5 - (0.25f64 + 0.25).sqrt();
        assert!((m.min_eigenvalue() - expect).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_elliptic() {
        let g = TorusGrid::<f64>::new(1, 16).unwrap();
        let a = SpectralField::from_real_fn(&g, |x| 0.5 + 0.2 * x[0].sin());
        assert!(CoefficientMatrix::scalar(&a, 1.0).is_err());
        assert!(CoefficientMatrix::scalar(&a, 0.3).is_ok());
        assert!(CoefficientMatrix::scalar(&a, 0.0).is_err());
        let m = CoefficientMatrix::identity(&g);
        assert_eq!(m.min_eigenvalue(), 1.0);
    }
}
