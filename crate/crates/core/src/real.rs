//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Binary floating point scalar (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Significand precision in bits, including the implicit bit.
    const MANTISSA_DIGITS: u32;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("integer out of range")
    }

    /// Dekker splitting constant `2^ceil(p/2) + 1`.
    #[inline]
    fn splitter() -> Self {
        Self::lit(((1u64 << Self::MANTISSA_DIGITS.div_ceil(2)) + 1) as f64)
    }
}

impl Real for f32 {
    const MANTISSA_DIGITS: u32 = f32::MANTISSA_DIGITS;
}

impl Real for f64 {
    const MANTISSA_DIGITS: u32 = f64::MANTISSA_DIGITS;
}

/// True when `x` is a non-positive integer (a pole of the gamma function).
pub(crate) fn is_nonpositive_integer<T: Real>(x: T) -> bool {
    x <= T::zero() && x == x.round()
}
