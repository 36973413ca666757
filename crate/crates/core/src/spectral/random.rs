//! Seeded random fields from a counter-based generator.
//!
//! The coefficient at frequency `xi` of member `member` is drawn from the
//! ChaCha8 stream `member` of `seed` at a word position derived from `xi`, so
//! it does not depend on the grid size: the same `(seed, member)` on a finer
//! grid reproduces every coarse coefficient and only adds new modes.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{Cplx, Real};

use super::{SpectralField, TorusGrid};

/// Spectral recipe for random fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    /// Keep `|xi| <= band_fraction * n / 2`.
    pub band_fraction: f64,
    /// Optional absolute frequency cap applied on top of `band_fraction`.
    pub band_cap: Option<f64>,
    /// Amplitude envelope `(1 + |xi|²)^{-decay/2}`.
    pub decay: f64,
    /// Hermitian-symmetric coefficients (real samples).
    pub real: bool,
}

impl FieldSpec {
    /// Flat spectrum over the whole lattice, Nyquist modes excluded.
    pub fn white_noise() -> Self {
        Self { band_fraction: 1.0, band_cap: None, decay: 0.0, real: false }
    }

    pub fn band_limited(band_fraction: f64, decay: f64) -> Self {
        Self { band_fraction, band_cap: None, decay, real: false }
    }

    pub fn real(mut self) -> Self {
        self.real = true;
        self
    }
}

/// Independent uniform draws on `[-1, 1)` addressed by `(seed, stream, counter)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    inner: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Two uniforms on `[-1, 1)` at `counter`.
    pub fn pair(&mut self, counter: u64) -> (f64, f64) {
        self.inner.set_word_pos(counter as u128 * 4);
        let a = self.inner.next_u64();
        let b = self.inner.next_u64();
        (to_signed_unit(a), to_signed_unit(b))
    }

    /// One uniform on `[0, 1)` at `counter`.
    pub fn unit(&mut self, counter: u64) -> f64 {
        self.inner.set_word_pos(counter as u128 * 4);
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[inline]
fn to_signed_unit(bits: u64) -> f64 {
    // 53 random mantissa bits mapped onto [-1, 1).
    (bits >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Derives an independent seed for a named sub-experiment.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    rng.set_stream(salt);
    rng.next_u64()
}

#[inline]
fn zigzag(k: i64) -> u64 {
    if k >= 0 {
        2 * k as u64
    } else {
        (-2 * k - 1) as u64
    }
}

#[inline]
fn counter_of(xi: [i64; 2]) -> u64 {
    let (a, b) = (zigzag(xi[0]), zigzag(xi[1]));
    if a >= b {
        a * a + a + b
    } else {
        a + b * b
    }
}

/// Random field number `member` of the ensemble `seed`.
pub fn random_field<T: Real>(grid: &TorusGrid<T>, spec: &FieldSpec, seed: u64, member: u64) -> SpectralField<T> {
    let mut rng = CounterRng::new(seed, member);
    let half = (grid.n() / 2) as i64;
    let mut band = spec.band_fraction * half as f64;
    if let Some(cap) = spec.band_cap {
        band = band.min(cap);
    }
    let mut coeffs = vec![Cplx::new(T::zero(), T::zero()); grid.len()];
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let xi = grid.xi(idx);
        if xi.iter().take(grid.dim()).any(|&k| k == -half) {
            continue;
        }
        let norm2 = (xi[0] * xi[0] + xi[1] * xi[1]) as f64;
        if norm2.sqrt() > band {
            continue;
        }
        let amp = (1.0 + norm2).powf(-spec.decay / 2.0);
        if spec.real {
            // Draw on the canonical half-lattice and mirror.
            let canonical = xi[0] > 0 || (xi[0] == 0 && xi[1] >= 0);
            let key = if canonical { xi } else { [-xi[0], -xi[1]] };
            let (re, im) = rng.pair(counter_of(key));
            let im = if key == [0, 0] { 0.0 } else { im };
            let v = if canonical { (re, im) } else { (re, -im) };
            *c = Cplx::new(T::lit(v.0 * amp), T::lit(v.1 * amp));
        } else {
            let (re, im) = rng.pair(counter_of(xi));
            *c = Cplx::new(T::lit(re * amp), T::lit(im * amp));
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("lattice length")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_keeps_coarse_coefficients() {
        let coarse = TorusGrid::<f64>::new(1, 64).unwrap();
        let fine = TorusGrid::<f64>::new(1, 128).unwrap();
        let spec = FieldSpec::band_limited(0.5, 1.0);
        let a = random_field(&coarse, &spec, 11, 3);
        let b = random_field(&fine, &spec, 11, 3);
        for xi in -15..=15 {
            assert_eq!(a.coeff([xi, 0]), b.coeff([xi, 0]));
        }
    }

    #[test]
    fn real_spec_gives_real_samples() {
        let g = TorusGrid::<f64>::new(2, 16).unwrap();
        let u = random_field(&g, &FieldSpec::white_noise().real(), 5, 1);
        assert!(u.max_imag() < 1e-14 * u.max_abs());
        assert!(u.max_abs() > 0.0);
    }

    #[test]
    fn deterministic_and_member_dependent() {
        let g = TorusGrid::<f64>::new(1, 32).unwrap();
        let s = FieldSpec::white_noise();
        let a = random_field(&g, &s, 1, 0);
        let b = random_field(&g, &s, 1, 0);
        let c = random_field(&g, &s, 1, 1);
        assert_eq!(a.coeffs(), b.coeffs());
        assert_ne!(a.coeffs(), c.coeffs());
        assert_ne!(derive_seed(1, 2), derive_seed(1, 3));
    }
}
