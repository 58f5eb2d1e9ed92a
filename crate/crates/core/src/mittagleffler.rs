//! The discrete Mittag-Leffler function `F_{q,lam}(t) = sum_m h_{qm}(t) lam^m`
//! and the survival function `P(T > t) = F_{q,-lam}(t)` of the waiting time.

use std::sync::{Arc, RwLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::series::{evaluate, HPart, HSeries, SeriesCache, SeriesControl, SeriesResult};

/// The pair `(q, lam)` with `0 < q <= 1` and `0 < lam < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessParams<T> {
    pub q: T,
    pub lam: T,
}

impl<T: Real> ProcessParams<T> {
    pub fn new(q: T, lam: T) -> Result<Self> {
        let p = Self { q, lam };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_q(self.q)?;
        if !(self.lam > T::zero() && self.lam < T::one()) {
            return Err(Error::InvalidParams(format!("lam must lie in (0, 1), got {}", self.lam)));
        }
        Ok(())
    }

    /// Success probability `lam / (1 + lam)` of the `q = 1` geometric law.
    pub fn p_geom(&self) -> T {
        self.lam / (T::one() + self.lam)
    }
}

pub(crate) fn check_q<T: Real>(q: T) -> Result<()> {
    if !(q > T::zero() && q <= T::one()) {
        return Err(Error::InvalidParams(format!("q must lie in (0, 1], got {q}")));
    }
    Ok(())
}

fn check_signed<T: Real>(q: T, lam: T) -> Result<()> {
    check_q(q)?;
    if !(lam.abs() < T::one()) || lam == T::zero() {
        return Err(Error::InvalidParams(format!("need 0 < |lam| < 1, got {lam}")));
    }
    Ok(())
}

fn ml_series<T: Real>(q: T, lam: T, t: usize) -> HSeries<T> {
    HSeries {
        q,
        x: lam,
        order: 0,
        s: t,
        k0: 0,
        parts: vec![HPart { weight: T::one(), shift: 0, minus_one: false }],
    }
}

fn ml_closed<T: Real>(lam: T, t: usize) -> Result<SeriesResult<T>> {
    let v = (T::one() - lam).powi(-(t as i32));
    if !v.is_finite() {
        return Err(Error::Range(format!("(1 - {lam})^-{t} overflows")));
    }
    Ok(SeriesResult::exact(v))
}

/// `F_{q,lam}(t)` for `0 < q <= 1`, `0 < |lam| < 1`.
///
/// `F(0) = 1`; `q = 1` uses `(1 - lam)^-t`. Negative `lam` makes the series
/// alternate; see [`SeriesControl::max_limbs`] for how that is handled.
pub fn ml_eval<T: Real>(q: T, lam: T, t: usize, ctl: &SeriesControl<T>) -> Result<SeriesResult<T>> {
    check_signed(q, lam)?;
    ctl.validate()?;
    if t == 0 {
        return Ok(SeriesResult::exact(T::one()));
    }
    if q == T::one() {
        return ml_closed(lam, t);
    }
    let mut cache = SeriesCache::new(q, &[t]);
    evaluate(&ml_series(q, lam, t), ctl, &mut cache)
}

/// `F_{q,lam}(t)` for every `t` in `0..=t_max`, sharing precomputation.
pub fn ml_eval_range<T: Real>(
    q: T,
    lam: T,
    t_max: usize,
    ctl: &SeriesControl<T>,
) -> Result<Vec<SeriesResult<T>>> {
    check_signed(q, lam)?;
    ctl.validate()?;
    let ts: Vec<usize> = (1..=t_max).collect();
    let mut cache = SeriesCache::new(q, &ts);
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(SeriesResult::exact(T::one()));
    for t in 1..=t_max {
        out.push(if q == T::one() {
            ml_closed(lam, t)?
        } else {
            evaluate(&ml_series(q, lam, t), ctl, &mut cache)?
        });
    }
    Ok(out)
}

/// Clamps `v` into `[0, 1]`, refusing to move it by more than `band`.
pub(crate) fn clamp_unit<T: Real>(v: T, band: T) -> Result<T> {
    if v < -band || v > T::one() + band {
        return Err(Error::Range(format!("probability {v} outside [0, 1] by more than {band}")));
    }
    Ok(v.max(T::zero()).min(T::one()))
}

/// `P(T > t) = F_{q,-lam}(t)`.
pub fn ml_survival<T: Real>(params: &ProcessParams<T>, t: usize, ctl: &SeriesControl<T>) -> Result<T> {
    params.validate()?;
    ctl.validate()?;
    let table = SurvivalTable::new(*params, t + 1)?;
    clamp_unit(table.get(t).expect("table covers t"), ctl.clamp_band())
}

/// `F_{q,-lam}(0..len)` built from the positive-term recurrence
///
/// ```text
/// (1 + lam) F(t) = h_{-q}(t) + sum_{j=1}^{t-1} s_j F(t - j),   t >= 1,
/// ```
///
/// where `s_j` is the Sibuya PMF. The recurrence involves no cancellation, so
/// the table is accurate for any `t`, unlike the alternating series. The
/// convolution is evaluated online (divide and conquer with FFT blocks), and
/// lengths are powers of two so that values do not depend on how far the
/// table has been extended.
#[derive(Debug, Clone)]
pub struct SurvivalTable<T> {
    params: ProcessParams<T>,
    /// `F(1), F(2), ...`
    f: Vec<T>,
    /// Sibuya PMF `s_0 = 0, s_1, s_2, ...`
    s: Vec<T>,
    /// `h_{-q}(1), h_{-q}(2), ...`
    hq: Vec<T>,
}

const LEAF: usize = 64;

impl<T: Real> SurvivalTable<T> {
    /// Table covering at least `t = 0..len`.
    pub fn new(params: ProcessParams<T>, len: usize) -> Result<Self> {
        params.validate()?;
        let mut tab = Self { params, f: Vec::new(), s: Vec::new(), hq: Vec::new() };
        tab.extend_to(len);
        Ok(tab)
    }

    pub fn params(&self) -> &ProcessParams<T> {
        &self.params
    }

    /// Number of tabulated values, `t = 0..len()`.
    pub fn len(&self) -> usize {
        self.f.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `F_{q,-lam}(t)` if tabulated.
    pub fn get(&self, t: usize) -> Option<T> {
        if t == 0 {
            Some(T::one())
        } else {
            self.f.get(t - 1).copied()
        }
    }

    /// Survival values `F(1), F(2), ...`, non-increasing.
    pub fn tail_values(&self) -> &[T] {
        &self.f
    }

    /// Grows the table (by doubling) until it covers `t = 0..len`.
    pub fn extend_to(&mut self, len: usize) {
        let want = len.saturating_sub(1).max(LEAF).next_power_of_two();
        if self.f.is_empty() {
            self.f = Vec::with_capacity(want);
        }
        while self.f.len() < want {
            let old = self.f.len();
            let new = if old == 0 { LEAF } else { old * 2 };
            self.grow(old, new);
        }
    }

    fn grow(&mut self, old: usize, new: usize) {
        let q = self.params.q;
        let lam = self.params.lam;
        let denom = T::one() + lam;
        if q == T::one() {
            let mut prev = self.f.last().copied().unwrap_or(T::one());
            for _ in old..new {
                prev = prev / denom;
                self.f.push(prev);
            }
            return;
        }
        // s[0..2 new) and hq[0..new)
        let need_s = 2 * new;
        if self.s.is_empty() {
            self.s.push(T::zero());
            self.s.push(q);
        }
        while self.s.len() < need_s {
            let k = T::from_usize_exact(self.s.len() - 1);
            let prev = *self.s.last().unwrap();
            self.s.push(prev * (k - q) / (k + T::one()));
        }
        if self.hq.is_empty() {
            self.hq.push(T::one());
        }
        while self.hq.len() < new {
            let j = T::from_usize_exact(self.hq.len());
            let prev = *self.hq.last().unwrap();
            self.hq.push(prev * (T::one() - q / j));
        }
        self.f.resize(new, T::zero());
        let mut acc = vec![T::zero(); new];
        let mut planner = FftPlanner::<T>::new();
        if old == 0 {
            self.solve(0, new, &mut acc, &mut planner, denom);
        } else {
            // identical to the top-level step of a fresh solve over [0, new)
            self.cross(0, old, new, &mut acc, &mut planner);
            self.solve(old, new, &mut acc, &mut planner, denom);
        }
    }

    /// Fills `f[l..r)` given that `acc[l..r)` holds contributions from `f[..l)`.
    fn solve(&mut self, l: usize, r: usize, acc: &mut [T], planner: &mut FftPlanner<T>, denom: T) {
        if r - l <= LEAF {
            for i in l..r {
                let mut a = acc[i];
                for u in l..i {
                    a = a + self.f[u] * self.s[i - u];
                }
                self.f[i] = (self.hq[i] + a) / denom;
            }
            return;
        }
        let mid = l + (r - l) / 2;
        self.solve(l, mid, acc, planner, denom);
        self.cross(l, mid, r, acc, planner);
        self.solve(mid, r, acc, planner, denom);
    }

    /// Adds `sum_{u in [l, mid)} f[u] s[i - u]` to `acc[i]` for `i in [mid, r)`.
    fn cross(&self, l: usize, mid: usize, r: usize, acc: &mut [T], planner: &mut FftPlanner<T>) {
        let n = 2 * (mid - l);
        debug_assert!(r - l <= n);
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut a: Vec<Complex<T>> = (0..n)
            .map(|k| Complex::new(if l + k < mid { self.f[l + k] } else { T::zero() }, T::zero()))
            .collect();
        let mut b: Vec<Complex<T>> =
            (0..n).map(|k| Complex::new(if k < r - l { self.s[k] } else { T::zero() }, T::zero())).collect();
        fft.process(&mut a);
        fft.process(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x = *x * *y;
        }
        ifft.process(&mut a);
        let scale = T::one() / T::from_usize_exact(n);
        for i in mid..r {
            acc[i] = acc[i] + a[i - l].re * scale;
        }
    }
}

/// A survival table shared between threads and extended on demand.
#[derive(Debug, Clone)]
pub struct SharedSurvival<T> {
    inner: Arc<RwLock<Arc<SurvivalTable<T>>>>,
}

impl<T: Real> SharedSurvival<T> {
    pub fn new(params: ProcessParams<T>, len: usize) -> Result<Self> {
        Ok(Self { inner: Arc::new(RwLock::new(Arc::new(SurvivalTable::new(params, len)?))) })
    }

    /// A snapshot covering at least `t = 0..len`.
    pub fn covering(&self, len: usize) -> Arc<SurvivalTable<T>> {
        {
            let cur = self.inner.read().expect("survival lock poisoned");
            if cur.len() >= len {
                return Arc::clone(&cur);
            }
        }
        let mut w = self.inner.write().expect("survival lock poisoned");
        if w.len() < len {
            let mut grown = SurvivalTable::clone(&w);
            grown.extend_to(len);
            *w = Arc::new(grown);
        }
        Arc::clone(&w)
    }

    pub fn get(&self, t: usize) -> T {
        self.covering(t + 1).get(t).expect("covered")
    }
}
