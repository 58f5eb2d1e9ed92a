//! Discrete fractional calculus on the integer grid.
//!
//! Backward differences, the discrete power function `x^(alpha) =
//! Gamma(x + alpha) / Gamma(x)`, the generalized binomial coefficient
//! `h_alpha(x) = Gamma(x + alpha) / (Gamma(alpha + 1) Gamma(x))` and the
//! fractional sum / difference operators built from them.

use crate::error::{Error, Result};
use crate::real::{is_nonpositive_integer, Real};
use crate::signed_log::SignedLogValue;
use crate::special::{gamma_ratio, ln_gamma_signed};

/// Samples `f(start), f(start + 1), ...` of a function on the integers.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    start: i64,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(start: i64, values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("grid function needs at least one value".into()));
        }
        Ok(Self { start, values })
    }

    /// Tabulates `f` on `start..start + len`.
    pub fn sample(start: i64, len: usize, f: impl Fn(i64) -> T) -> Result<Self> {
        Self::new(start, (0..len as i64).map(|i| f(start + i)).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last grid point.
    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, t: i64) -> Option<T> {
        if t < self.start {
            return None;
        }
        self.values.get((t - self.start) as usize).copied()
    }

    fn at(&self, t: i64) -> Result<T> {
        self.get(t).ok_or_else(|| {
            Error::Domain(format!("t = {t} outside grid [{}, {}]", self.start, self.end()))
        })
    }
}

/// Discrete power function `Gamma(x + alpha) / Gamma(x)`.
pub fn rising_factorial<T: Real>(x: T, alpha: T) -> Result<SignedLogValue<T>> {
    gamma_ratio(x, alpha)
}

pub fn rising_factorial_value<T: Real>(x: T, alpha: T) -> Result<T> {
    rising_factorial(x, alpha)?.to_real()
}

/// Generalized binomial coefficient `h_alpha(x)`.
///
/// At `x = 0` the `1/Gamma(0) = 0` limit is used: `h_alpha(0) = 0` unless
/// `alpha = 0`, where it is 1. Every other pole configuration is an error.
pub fn gbc<T: Real>(alpha: T, x: T) -> Result<SignedLogValue<T>> {
    let neg_int_alpha = alpha < T::zero() && is_nonpositive_integer(alpha);
    if x == T::zero() {
        if alpha == T::zero() {
            return Ok(SignedLogValue::one());
        }
        if neg_int_alpha {
            return Err(Error::Domain(format!("h_{alpha}(0) is undefined")));
        }
        return Ok(SignedLogValue::zero());
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Domain(format!("h_alpha(x) undefined at x = {x}")));
    }
    if neg_int_alpha {
        return Err(Error::Domain(format!("h_alpha(x) undefined at alpha = {alpha}")));
    }
    if is_nonpositive_integer(x + alpha) {
        return Err(Error::Domain(format!("h_{alpha}({x}): x + alpha is a pole")));
    }
    if alpha == T::zero() || x == T::one() {
        return Ok(SignedLogValue::one());
    }
    let (s, lg) = ln_gamma_signed(alpha + T::one())?;
    Ok(gamma_ratio(x, alpha)? / SignedLogValue::from_parts(s, lg))
}

pub fn gbc_value<T: Real>(alpha: T, x: T) -> Result<T> {
    gbc(alpha, x)?.to_real()
}

/// `h_beta(1), ..., h_beta(len)` by the product recurrence
/// `h_beta(k + 1) = h_beta(k) (k + beta) / k`.
///
/// Exact for integer `beta >= 0` while the values stay below `2^p`.
pub fn gbc_weights<T: Real>(beta: T, len: usize) -> Vec<T> {
    let mut w = Vec::with_capacity(len);
    let mut cur = T::one();
    for k in 1..=len {
        w.push(cur);
        let kf = T::from_usize_exact(k);
        cur = cur * (kf + beta) / kf;
    }
    w
}

/// Backward difference `f(t) - f(t - 1)` on `start + 1 ..= end`.
pub fn nabla<T: Real>(f: &GridFunction<T>) -> Result<GridFunction<T>> {
    if f.len() < 2 {
        return Err(Error::Domain("nabla needs at least two grid values".into()));
    }
    let values = f.values.windows(2).map(|w| w[1] - w[0]).collect();
    GridFunction::new(f.start + 1, values)
}

/// `m`-fold backward difference.
pub fn nabla_pow<T: Real>(f: &GridFunction<T>, m: usize) -> Result<GridFunction<T>> {
    let mut g = f.clone();
    for _ in 0..m {
        g = nabla(&g)?;
    }
    Ok(g)
}

/// Fractional sum `sum_{u=a}^{t} h_{alpha-1}(t - u + 1) f(u)`.
pub fn fractional_sum<T: Real>(f: &GridFunction<T>, alpha: T, t: i64) -> Result<T> {
    if !(alpha > T::zero()) {
        return Err(Error::Domain(format!("fractional sum order must be > 0, got {alpha}")));
    }
    f.at(t)?;
    let n = (t - f.start + 1) as usize;
    let w = gbc_weights(alpha - T::one(), n);
    // w[k-1] = h(k) pairs with f(t - k + 1)
    Ok(f.values[..n]
        .iter()
        .rev()
        .zip(&w)
        .fold(T::zero(), |acc, (&fv, &wk)| acc + wk * fv))
}

fn order_split<T: Real>(alpha: T) -> Result<(usize, T)> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Domain(format!("difference order must be > 0, got {alpha}")));
    }
    let m = alpha.ceil();
    let m_usize = m.to_usize().ok_or_else(|| Error::Domain("order too large".into()))?;
    Ok((m_usize, m - alpha))
}

/// Riemann-Liouville fractional difference `nabla^m nabla_a^{-(m - alpha)} f(t)`
/// with `m = ceil(alpha)`.
pub fn fractional_difference_rl<T: Real>(f: &GridFunction<T>, alpha: T, t: i64) -> Result<T> {
    let (m, nu) = order_split(alpha)?;
    if t - (m as i64) < f.start || t > f.end() {
        return Err(Error::Domain(format!(
            "grid [{}, {}] cannot form an order-{m} difference at t = {t}",
            f.start,
            f.end()
        )));
    }
    let inner = |tau: i64| -> Result<T> {
        if nu == T::zero() {
            f.at(tau)
        } else {
            fractional_sum(f, nu, tau)
        }
    };
    // nabla^m g(t) = sum_i (-1)^i C(m, i) g(t - i)
    let mut acc = T::zero();
    let mut binom = T::one();
    for i in 0..=m {
        let term = binom * inner(t - i as i64)?;
        acc = if i % 2 == 0 { acc + term } else { acc - term };
        binom = binom * T::from_usize_exact(m - i) / T::from_usize_exact(i + 1);
    }
    Ok(acc)
}

/// Caputo fractional difference `nabla_{a+m}^{-(m - alpha)} nabla^m f(t)`.
///
/// The inner difference lives on `a + m ..`, which is where the outer sum starts.
pub fn fractional_difference_caputo<T: Real>(
    f: &GridFunction<T>,
    alpha: T,
    t: i64,
) -> Result<T> {
    let (m, nu) = order_split(alpha)?;
    if t - (m as i64) < f.start || t > f.end() {
        return Err(Error::Domain(format!(
            "grid [{}, {}] cannot form an order-{m} Caputo difference at t = {t}",
            f.start,
            f.end()
        )));
    }
    let d = nabla_pow(f, m)?;
    if nu == T::zero() {
        d.at(t)
    } else {
        fractional_sum(&d, nu, t)
    }
}
