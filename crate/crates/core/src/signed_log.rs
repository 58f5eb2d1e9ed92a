//! Real numbers stored as a sign and a natural-log magnitude.

use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

use crate::error::{Error, Result};
use crate::expansion::two_sum;
use crate::real::Real;

/// A real number `sign * exp(log_abs)`.
///
/// The log magnitude is kept as an unevaluated pair `hi + lo` so that a
/// round trip through [`SignedLogValue::from_real`] does not lose the
/// `|ln v| * eps` relative accuracy a single rounded logarithm would.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue<T> {
    sign: i8,
    hi: T,
    lo: T,
}

impl<T: Real> SignedLogValue<T> {
    pub fn zero() -> Self {
        Self { sign: 0, hi: T::neg_infinity(), lo: T::zero() }
    }

    pub fn one() -> Self {
        Self { sign: 1, hi: T::zero(), lo: T::zero() }
    }

    /// Builds a value from a sign in `{-1, 0, +1}` and a log magnitude.
    pub fn from_parts(sign: i8, log_abs: T) -> Self {
        match sign.cmp(&0) {
            Ordering::Equal => Self::zero(),
            Ordering::Less => Self { sign: -1, hi: log_abs, lo: T::zero() },
            Ordering::Greater => Self { sign: 1, hi: log_abs, lo: T::zero() },
        }
    }

    pub fn from_real(v: T) -> Self {
        if v == T::zero() {
            return Self::zero();
        }
        let a = v.abs();
        let hi = a.ln();
        // `exp(-hi)` carries only its own rounding, so the residual recovers
        // the bits lost when rounding `ln a` to `hi`.
        let lo = (a * (-hi).exp() - T::one()).ln_1p();
        let (hi, lo) = if lo.is_finite() { two_sum(hi, lo) } else { (hi, T::zero()) };
        Self { sign: if v < T::zero() { -1 } else { 1 }, hi, lo }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_abs(&self) -> T {
        self.hi + self.lo
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        Self { sign: self.sign.abs(), ..self }
    }

    /// Converts to a plain real, failing instead of returning infinity.
    pub fn to_real(&self) -> Result<T> {
        if self.sign == 0 {
            return Ok(T::zero());
        }
        let mag = self.hi.exp() * self.lo.exp();
        if !mag.is_finite() {
            return Err(Error::Range(format!(
                "value exp({}) overflows the scalar type",
                self.log_abs().to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(if self.sign < 0 { -mag } else { mag })
    }

    /// Like [`to_real`](Self::to_real) but saturating to +/- infinity.
    pub fn to_real_lossy(&self) -> T {
        match self.to_real() {
            Ok(v) => v,
            Err(_) if self.sign < 0 => T::neg_infinity(),
            Err(_) => T::infinity(),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.sign == 0 {
            return Self::zero();
        }
        let k = T::from_i32(n).expect("exponent out of range");
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        let (hi, lo) = two_sum(self.hi * k, self.lo * k);
        Self { sign, hi, lo }
    }

    /// Division that reports a zero divisor instead of producing a pole.
    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.sign == 0 {
            return Err(Error::Domain("division by zero".into()));
        }
        Ok(self / rhs)
    }
}

impl<T: Real> Mul for SignedLogValue<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let sign = self.sign * rhs.sign;
        if sign == 0 {
            return Self::zero();
        }
        let (hi, e) = two_sum(self.hi, rhs.hi);
        let (hi, lo) = two_sum(hi, e + self.lo + rhs.lo);
        Self { sign, hi, lo }
    }
}

impl<T: Real> Div for SignedLogValue<T> {
    type Output = Self;

    /// Panics on a zero divisor; see [`SignedLogValue::checked_div`].
    fn div(self, rhs: Self) -> Self {
        assert!(rhs.sign != 0, "SignedLogValue division by zero");
        if self.sign == 0 {
            return Self::zero();
        }
        let (hi, e) = two_sum(self.hi, -rhs.hi);
        let (hi, lo) = two_sum(hi, e + self.lo - rhs.lo);
        Self { sign: self.sign * rhs.sign, hi, lo }
    }
}

impl<T: Real> Neg for SignedLogValue<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self { sign: -self.sign, ..self }
    }
}
