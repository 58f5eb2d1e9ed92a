//! Truncated evaluation of the binomial-weighted `h`-series that define the
//! discrete Mittag-Leffler function, the waiting-time PMF and the count PMF:
//!
//! ```text
//! sum_{m >= 0} C(order + m, order) x^m  sum_p w_p h_{q (k0 + m + shift_p) + off_p}(s)
//! ```
//!
//! with `off_p` in `{0, -1}`. For negative `x` these series alternate with
//! terms many orders of magnitude above the result, so evaluation runs in
//! tiers: a log-space double pass with compensated summation, then (if its
//! cancellation diagnostic says the double result cannot be trusted to
//! `rel_tol`) a pass in 2-, 3-, 4- or 8-limb expansion arithmetic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{two_sum, Expansion};
use crate::fraccalc::gbc;
use crate::real::Real;
use crate::signed_log::SignedLogValue;
use crate::special::{gamma_ratio, ln_gamma};

/// Ratio `max |partial| / |value|` above which a double-only evaluation
/// is declared wiped out.
pub const WIPEOUT_RATIO: f64 = 1e12;

/// Truncation policy for every infinite series in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesControl<T> {
    pub rel_tol: T,
    pub max_terms: usize,
    /// Consecutive negligible terms required before stopping.
    pub consec_small: usize,
    /// Widest expansion (in limbs) the evaluator may escalate to; 1 means
    /// plain double with the fixed wipeout threshold.
    pub max_limbs: usize,
}

impl<T: Real> Default for SeriesControl<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-12), max_terms: 10_000, consec_small: 3, max_limbs: 8 }
    }
}

impl<T: Real> SeriesControl<T> {
    pub fn with_rel_tol(rel_tol: T) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) {
            return Err(Error::InvalidParams(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_terms < 1 || self.consec_small < 1 {
            return Err(Error::InvalidParams("max_terms and consec_small must be >= 1".into()));
        }
        if ![1, 2, 3, 4, 8].contains(&self.max_limbs) {
            return Err(Error::InvalidParams(format!(
                "max_limbs must be 1, 2, 3, 4 or 8, got {}",
                self.max_limbs
            )));
        }
        Ok(())
    }

    /// Clamp band for tiny negative probabilities.
    pub fn clamp_band(&self) -> T {
        T::lit(10.0) * self.rel_tol
    }
}

/// Value of a truncated series with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult<T> {
    pub value: T,
    pub terms_used: usize,
    /// Largest magnitude among terms and partial sums.
    pub max_partial_abs: T,
    pub converged: bool,
    /// Limbs of the arithmetic that produced `value` (1 = double).
    pub limbs: usize,
}

impl<T: Real> SeriesResult<T> {
    pub fn exact(value: T) -> Self {
        Self { value, terms_used: 0, max_partial_abs: value.abs(), converged: true, limbs: 1 }
    }

    /// `max_partial_abs / |value|`; infinite for a zero value.
    pub fn cancellation_ratio(&self) -> f64 {
        let v = self.value.abs().to_f64().unwrap_or(0.0);
        let m = self.max_partial_abs.to_f64().unwrap_or(f64::INFINITY);
        if v == 0.0 {
            if m == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            (m / v).max(1.0)
        }
    }

    pub(crate) fn scaled(mut self, factor: T) -> Self {
        self.value = self.value * factor;
        self.max_partial_abs = self.max_partial_abs * factor.abs();
        self
    }
}

/// Error-free running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    err: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), err: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.err = self.err + e;
    }

    pub fn value(&self) -> T {
        self.sum + self.err
    }
}

impl<T: Real> std::iter::FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// One summand family `w * h_{q (k + shift) + off}(s)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HPart<T> {
    pub weight: T,
    pub shift: usize,
    pub minus_one: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct HSeries<T> {
    pub q: T,
    pub x: T,
    pub order: usize,
    pub s: usize,
    pub k0: usize,
    pub parts: Vec<HPart<T>>,
}

/// Significand bits effectively available with `limbs` limbs of `T`.
fn bits_for<T: Real>(limbs: usize) -> f64 {
    let p = T::MANTISSA_DIGITS as f64;
    let range = -T::min_positive_value().to_f64().unwrap_or(f64::MIN_POSITIVE).log2();
    (p * limbs as f64).min(range - 40.0)
}

/// Relative error bound per unit of `max_partial_abs` for a tier.
fn unit_error<T: Real>(limbs: usize, s: usize, terms: usize) -> f64 {
    if limbs == 1 {
        // log-space terms: the gamma ratios dominate
        return 2f64.powi(-(T::MANTISSA_DIGITS as i32) + 9);
    }
    2f64.powf(-bits_for::<T>(limbs) + 4.0) * (s + terms + 4) as f64
}

fn certified<T: Real>(r: &SeriesResult<T>, rel_tol: T, s: usize) -> bool {
    let tol = rel_tol.to_f64().unwrap_or(1e-12);
    unit_error::<T>(r.limbs, s, r.terms_used) * r.cancellation_ratio() <= tol
}

/// Exponent step used to keep running products inside the scalar range.
const RESCALE: i32 = 480;

/// `x * 2^k`, applied in steps that stay exact.
fn scale2<T: Real, const N: usize>(mut x: Expansion<T, N>, mut k: i32) -> Expansion<T, N> {
    while k > RESCALE {
        x = x.ldexp(RESCALE);
        k -= RESCALE;
    }
    while k < -RESCALE {
        x = x.ldexp(-RESCALE);
        k += RESCALE;
    }
    x.ldexp(k)
}

/// Pulls `x` back towards 1 by a power of two, returning the exponent removed.
fn renormalize<T: Real, const N: usize>(x: &mut Expansion<T, N>) -> i32 {
    let lead = x.leading().abs();
    let big = T::lit(2.0).powi(RESCALE);
    if lead > big {
        *x = x.ldexp(-RESCALE);
        RESCALE
    } else if lead != T::zero() && lead < T::one() / big {
        *x = x.ldexp(RESCALE);
        -RESCALE
    } else {
        0
    }
}

/// Lazily extended table of `h_{q k}(s)` for `s` in a fixed set.
///
/// A row keeps the rising product `prod_{j<s} (q k + j)` and multiplies in
/// `1/(s-1)!` only at tabulated columns, so no per-step division is needed.
pub(crate) struct HTable<T, const N: usize> {
    q: T,
    wanted: Vec<usize>,
    col: Vec<Option<usize>>,
    /// `1/(s-1)!` per tabulated column, as mantissa and power of two.
    inv_fact: Vec<(Expansion<T, N>, i32)>,
    rows: Vec<Vec<Expansion<T, N>>>,
}

impl<T: Real, const N: usize> HTable<T, N> {
    pub fn new(q: T, wanted: &[usize]) -> Self {
        let mut wanted: Vec<usize> = wanted.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let s_max = wanted.last().copied().unwrap_or(1);
        let mut col = vec![None; s_max + 1];
        for (i, &s) in wanted.iter().enumerate() {
            col[s] = Some(i);
        }
        let mut inv_fact = Vec::with_capacity(wanted.len());
        let mut f = Expansion::<T, N>::from_scalar(T::one());
        let mut e = 0;
        for s in 1..=s_max {
            if col[s].is_some() {
                inv_fact.push((f, e));
            }
            f = f.div_scalar(T::from_usize_exact(s));
            e += renormalize(&mut f);
        }
        Self { q, wanted, col, inv_fact, rows: Vec::new() }
    }

    fn push_row(&mut self) {
        let k = self.rows.len();
        let (a, b) = crate::expansion::two_prod(self.q, T::from_usize_exact(k));
        let beta = Expansion::<T, N>::from_scalar(a).add_scalar(b);
        let s_max = *self.wanted.last().unwrap_or(&1);
        let mut row = Vec::with_capacity(self.wanted.len());
        let mut prod = Expansion::<T, N>::from_scalar(T::one());
        let mut e = 0;
        for s in 1..=s_max {
            if let Some(c) = self.col[s] {
                let (inv, ei) = self.inv_fact[c];
                row.push(scale2(prod.mul(&inv), e + ei));
            }
            if s < s_max {
                prod = prod.mul(&beta.add_scalar(T::from_usize_exact(s)));
                e += renormalize(&mut prod);
            }
        }
        self.rows.push(row);
    }

    pub fn get(&mut self, k: usize, s: usize) -> Expansion<T, N> {
        while self.rows.len() <= k {
            self.push_row();
        }
        let c = self.col.get(s).copied().flatten().expect("s not tabulated");
        self.rows[k][c]
    }

    /// `h_{q k - 1}(s) = h_{q k}(s) - h_{q k}(s - 1)`; needs column `s - 1` too.
    pub fn get_lowered(&mut self, k: usize, s: usize) -> Expansion<T, N> {
        if s == 1 {
            return Expansion::from_scalar(T::one());
        }
        self.get(k, s).sub(&self.get(k, s - 1))
    }
}

/// Expansion tables for every tier, created on first use.
pub(crate) struct SeriesCache<T> {
    q: T,
    wanted: Vec<usize>,
    t2: Option<HTable<T, 2>>,
    t3: Option<HTable<T, 3>>,
    t4: Option<HTable<T, 4>>,
    t8: Option<HTable<T, 8>>,
}

impl<T: Real> SeriesCache<T> {
    /// Tables covering `wanted` and, for lowered orders, each `s - 1`.
    pub fn new(q: T, wanted: &[usize]) -> Self {
        let mut cols: Vec<usize> = wanted.iter().flat_map(|&s| [s, s.saturating_sub(1)]).filter(|&s| s > 0).collect();
        cols.sort_unstable();
        cols.dedup();
        Self { q, wanted: cols, t2: None, t3: None, t4: None, t8: None }
    }
}

trait TierTables<T: Real, const N: usize> {
    fn table(&mut self) -> &mut HTable<T, N>;
}

macro_rules! tier_tables {
    ($n:literal, $field:ident) => {
        impl<T: Real> TierTables<T, $n> for SeriesCache<T> {
            fn table(&mut self) -> &mut HTable<T, $n> {
                let (q, wanted) = (self.q, &self.wanted);
                self.$field.get_or_insert_with(|| HTable::new(q, wanted))
            }
        }
    };
}
tier_tables!(2, t2);
tier_tables!(3, t3);
tier_tables!(4, t4);
tier_tables!(8, t8);

struct StopRule<T> {
    rel_tol: T,
    needed: usize,
    run: usize,
}

impl<T: Real> StopRule<T> {
    fn new(ctl: &SeriesControl<T>) -> Self {
        Self { rel_tol: ctl.rel_tol, needed: ctl.consec_small, run: 0 }
    }

    fn done(&mut self, m: usize, term_abs: T, partial_abs: T) -> bool {
        if term_abs <= self.rel_tol * (T::one() + partial_abs) {
            self.run += 1;
        } else {
            self.run = 0;
        }
        m >= 2 && self.run >= self.needed
    }
}

fn eval_double<T: Real>(hs: &HSeries<T>, ctl: &SeriesControl<T>) -> Result<SeriesResult<T>> {
    let ln_order_fact = ln_gamma(T::from_usize_exact(hs.order + 1))?;
    let ln_x = hs.x.abs().ln();
    let x_neg = hs.x < T::zero();
    let s = T::from_usize_exact(hs.s);
    let mut acc = CompensatedSum::new();
    let mut max_abs = T::zero();
    let mut stop = StopRule::new(ctl);
    let mut last = T::zero();
    for m in 0..ctl.max_terms {
        let mf = T::from_usize_exact(m);
        // C(order + m, order) |x|^m
        let ln_coef = gamma_ratio(mf + T::one(), T::from_usize_exact(hs.order))?.log_abs()
            - ln_order_fact
            + mf * ln_x;
        let sign: i8 = if x_neg && m % 2 == 1 { -1 } else { 1 };
        let coef = SignedLogValue::from_parts(sign, ln_coef);
        let mut term = CompensatedSum::new();
        for p in &hs.parts {
            let k = T::from_usize_exact(hs.k0 + m + p.shift);
            let alpha = hs.q * k - if p.minus_one { T::one() } else { T::zero() };
            let v = (coef * gbc(alpha, s)?).to_real()?;
            term.add(p.weight * v);
        }
        let term = term.value();
        acc.add(term);
        let partial = acc.value();
        max_abs = max_abs.max(term.abs()).max(partial.abs());
        last = term;
        if stop.done(m, term.abs(), partial.abs()) {
            return Ok(SeriesResult {
                value: partial,
                terms_used: m + 1,
                max_partial_abs: max_abs,
                converged: true,
                limbs: 1,
            });
        }
    }
    Err(Error::Convergence { max_terms: ctl.max_terms, last_term: last.to_f64().unwrap_or(f64::NAN) })
}

fn eval_expansion<T: Real, const N: usize>(
    hs: &HSeries<T>,
    ctl: &SeriesControl<T>,
    cache: &mut SeriesCache<T>,
) -> Result<SeriesResult<T>>
where
    SeriesCache<T>: TierTables<T, N>,
{
    let table = TierTables::<T, N>::table(cache);
    let mut coef = Expansion::<T, N>::from_scalar(T::one());
    let mut acc = Expansion::<T, N>::zero();
    let mut max_abs = T::zero();
    let mut stop = StopRule::new(ctl);
    let mut last = T::zero();
    for m in 0..ctl.max_terms {
        if m > 0 {
            coef = coef
                .mul_scalar(hs.x)
                .mul_scalar(T::from_usize_exact(hs.order + m))
                .div_scalar(T::from_usize_exact(m));
        }
        let mut bracket = Expansion::<T, N>::zero();
        for p in &hs.parts {
            let k = hs.k0 + m + p.shift;
            let h = if p.minus_one { table.get_lowered(k, hs.s) } else { table.get(k, hs.s) };
            bracket = bracket.add(&h.mul_scalar(p.weight));
        }
        let term = coef.mul(&bracket);
        acc = acc.add(&term);
        if !acc.is_finite() {
            return Err(Error::Range("series terms exceed the scalar range".into()));
        }
        let (t_abs, p_abs) = (term.leading().abs(), acc.leading().abs());
        max_abs = max_abs.max(t_abs).max(p_abs);
        last = term.leading();
        if stop.done(m, t_abs, p_abs) {
            return Ok(SeriesResult {
                value: acc.value(),
                terms_used: m + 1,
                max_partial_abs: max_abs,
                converged: true,
                limbs: N,
            });
        }
    }
    Err(Error::Convergence { max_terms: ctl.max_terms, last_term: last.to_f64().unwrap_or(f64::NAN) })
}

fn eval_tier<T: Real>(
    limbs: usize,
    hs: &HSeries<T>,
    ctl: &SeriesControl<T>,
    cache: &mut SeriesCache<T>,
) -> Result<SeriesResult<T>> {
    match limbs {
        2 => eval_expansion::<T, 2>(hs, ctl, cache),
        3 => eval_expansion::<T, 3>(hs, ctl, cache),
        4 => eval_expansion::<T, 4>(hs, ctl, cache),
        8 => eval_expansion::<T, 8>(hs, ctl, cache),
        _ => eval_double(hs, ctl),
    }
}

/// Evaluates the series, escalating precision until the result is certified
/// to `ctl.rel_tol` or `ctl.max_limbs` is exhausted.
pub(crate) fn evaluate<T: Real>(
    hs: &HSeries<T>,
    ctl: &SeriesControl<T>,
    cache: &mut SeriesCache<T>,
) -> Result<SeriesResult<T>> {
    ctl.validate()?;
    let first = eval_double(hs, ctl)?;
    if ctl.max_limbs == 1 {
        let ratio = first.cancellation_ratio();
        if ratio > WIPEOUT_RATIO {
            return Err(Error::Cancellation { ratio, limbs: 1 });
        }
        return Ok(first);
    }
    if certified(&first, ctl.rel_tol, hs.s) {
        return Ok(first);
    }
    let tol = ctl.rel_tol.to_f64().unwrap_or(1e-12);
    let mut ratio = first.cancellation_ratio();
    let mut terms = first.terms_used;
    let mut last_limbs = 1;
    for limbs in [2usize, 3, 4, 8].into_iter().filter(|&l| l <= ctl.max_limbs) {
        // skip tiers that cannot possibly resolve the observed cancellation
        let predicted = unit_error::<T>(limbs, hs.s, terms) * ratio;
        if predicted > tol && limbs < ctl.max_limbs && ratio.is_finite() {
            continue;
        }
        let r = eval_tier(limbs, hs, ctl, cache)?;
        last_limbs = limbs;
        if certified(&r, ctl.rel_tol, hs.s) {
            return Ok(r);
        }
        ratio = r.cancellation_ratio();
        terms = r.terms_used;
    }
    Err(Error::Cancellation { ratio, limbs: last_limbs })
}
