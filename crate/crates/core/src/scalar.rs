use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar the whole toolkit is generic over (`f32` or `f64`).
///
/// The tolerances quoted throughout the tests (1e-12 and below) only make
/// sense for `f64`; `f32` is supported for coarse exploration.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Debug + Display + Sum + 'static
{
    /// Converts an `f64` literal, panicking only if the type cannot hold it.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon for the type.
    #[inline]
    fn eps() -> Self {
        Float::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over [`Real`].
pub type Cplx<T> = num_complex::Complex<T>;
