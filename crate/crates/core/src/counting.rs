//! Distribution of the event count `N(t) = max{n : T_1 + ... + T_n <= t}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mittagleffler::ProcessParams;
use crate::real::Real;
use crate::renewal::{clamp_probability, WaitingTimeDist};
use crate::series::{evaluate, CompensatedSum, HPart, HSeries, SeriesCache, SeriesControl, SeriesResult};

/// A single `P(N(t) = n)` request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountPmfQuery<T> {
    pub params: ProcessParams<T>,
    pub t: usize,
    pub n: usize,
    pub ctl: SeriesControl<T>,
}

/// `P(N(t) = n)` for `n = 0..=n_max` at a fixed `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfTable<T> {
    pub params: ProcessParams<T>,
    pub t: usize,
    pub probs: Vec<T>,
    /// `1 - sum(probs)`: the mass of `N(t) > n_max`.
    pub tail_mass: T,
    pub diagnostics: Vec<SeriesResult<T>>,
}

/// Both sides of the generating-function identity for a fixed `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GfCheck<T> {
    /// `sum_{t <= t_max} P(N(t) = n) z^t`
    pub lhs: T,
    /// Closed form of the full sum.
    pub rhs: T,
    /// `z^(t_max+1) / (1 - z)`, an upper bound on `rhs - lhs`.
    pub tail_allowance: T,
}

impl<T: Real> GfCheck<T> {
    /// `-slack <= rhs - lhs <= tail_allowance + slack`.
    pub fn agrees(&self, slack: T) -> bool {
        let d = self.rhs - self.lhs;
        d >= -slack && d <= self.tail_allowance + slack
    }
}

fn count_series<T: Real>(params: &ProcessParams<T>, t: usize, n: usize) -> HSeries<T> {
    HSeries {
        q: params.q,
        x: -params.lam,
        order: n,
        s: t - n + 1,
        k0: n,
        parts: vec![
            HPart { weight: T::one(), shift: 0, minus_one: false },
            HPart { weight: params.lam, shift: 1, minus_one: true },
        ],
    }
}

fn exact_with_cache<T: Real>(
    params: &ProcessParams<T>,
    t: usize,
    n: usize,
    ctl: &SeriesControl<T>,
    cache: &mut SeriesCache<T>,
) -> Result<SeriesResult<T>> {
    if t < n {
        return Ok(SeriesResult::exact(T::zero()));
    }
    if t == n {
        // every waiting time equals one
        return Ok(SeriesResult::exact(params.p_geom().powi(n as i32)));
    }
    let r = evaluate(&count_series(params, t, n), ctl, cache)?;
    let r = r.scaled(params.lam.powi(n as i32));
    Ok(SeriesResult { value: clamp_probability(r.value, ctl.clamp_band())?, ..r })
}

fn validate<T: Real>(params: &ProcessParams<T>, ctl: &SeriesControl<T>) -> Result<()> {
    params.validate()?;
    ctl.validate()
}

/// `P(N(t) = n)` from the series
/// `lam^n sum_m C(n+m, n) (-lam)^m [h_{q(n+m)}(s) + lam h_{q(n+m+1)-1}(s)]`,
/// `s = t - n + 1`, with its truncation diagnostics.
pub fn count_pmf_exact_result<T: Real>(query: &CountPmfQuery<T>) -> Result<SeriesResult<T>> {
    validate(&query.params, &query.ctl)?;
    let s = query.t.saturating_sub(query.n) + 1;
    let mut cache = SeriesCache::new(query.params.q, &[s]);
    exact_with_cache(&query.params, query.t, query.n, &query.ctl, &mut cache)
}

/// `P(N(t) = n)`; exactly zero for `t < n`.
pub fn count_pmf_exact<T: Real>(query: &CountPmfQuery<T>) -> Result<T> {
    count_pmf_exact_result(query).map(|r| r.value)
}

/// `P(N(t) = n) = P(S_n <= t) - P(S_{n+1} <= t)` by explicit convolution of
/// the waiting-time PMF. `O(n t^2)`; meant as a reference for small inputs.
pub fn count_pmf_oracle<T: Real>(query: &CountPmfQuery<T>) -> Result<T> {
    validate(&query.params, &query.ctl)?;
    let CountPmfQuery { params, t, n, ctl } = *query;
    if t < n {
        return Ok(T::zero());
    }
    if t == 0 {
        return Ok(T::one());
    }
    let d = WaitingTimeDist::new(params, ctl)?;
    let mut pmf = vec![T::zero()];
    pmf.extend(d.pmf_vec(t)?);
    // law of S_k restricted to {0..=t}
    let mut law = vec![T::zero(); t + 1];
    law[0] = T::one();
    let cdf = |law: &[T]| law.iter().copied().collect::<CompensatedSum<T>>().value();
    for _ in 0..n {
        law = convolve(&law, &pmf);
    }
    let below_n = cdf(&law);
    let below_n1 = cdf(&convolve(&law, &pmf));
    clamp_probability(below_n - below_n1, ctl.clamp_band())
}

/// `(a * b)[0..a.len()]`, with `b[0] = 0` skipped.
fn convolve<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let len = a.len();
    (0..len)
        .map(|i| (1..=i).map(|j| a[i - j] * b[j]).collect::<CompensatedSum<T>>().value())
        .collect()
}

/// `P(N(t) = n)` for `n = 0..=n_max`, sharing the coefficient tables.
pub fn count_table<T: Real>(
    params: &ProcessParams<T>,
    t: usize,
    n_max: usize,
    ctl: &SeriesControl<T>,
) -> Result<PmfTable<T>> {
    validate(params, ctl)?;
    let top = n_max.min(t);
    let wanted: Vec<usize> = (0..=top).map(|n| t - n + 1).collect();
    let mut cache = SeriesCache::new(params.q, &wanted);
    let diagnostics = (0..=n_max)
        .map(|n| exact_with_cache(params, t, n, ctl, &mut cache))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<T> = diagnostics.iter().map(|r| r.value).collect();
    let total = probs.iter().copied().collect::<CompensatedSum<T>>().value();
    let tail_mass = clamp_probability(T::one() - total, ctl.clamp_band())?;
    Ok(PmfTable { params: *params, t, probs, tail_mass, diagnostics })
}

/// Compares `sum_{t=0}^{t_max} P(N(t) = n) z^t` with the closed form
/// `lam^n z^n [(1-z)^(q-1) + lam] / ((1-z)^q + lam)^(n+1)`.
pub fn count_gf_check<T: Real>(
    params: &ProcessParams<T>,
    n: usize,
    z: T,
    t_max: usize,
    ctl: &SeriesControl<T>,
) -> Result<GfCheck<T>> {
    validate(params, ctl)?;
    if !(z >= T::zero() && z <= T::lit(0.95)) {
        return Err(Error::Domain(format!("z must lie in [0, 0.95], got {z}")));
    }
    let ProcessParams { q, lam } = *params;
    let w = T::one() - z;
    let rhs = (lam * z).powi(n as i32) * (w.powf(q - T::one()) + lam)
        / (w.powf(q) + lam).powi(n as i32 + 1);
    let mut lhs = CompensatedSum::new();
    if t_max >= n {
        let wanted: Vec<usize> = (1..=t_max - n + 1).collect();
        let mut cache = SeriesCache::new(q, &wanted);
        let mut zt = z.powi(n as i32);
        for t in n..=t_max {
            let p = exact_with_cache(params, t, n, ctl, &mut cache)?.value;
            lhs.add(p * zt);
            zt = zt * z;
        }
    }
    let tail_allowance = z.powi(t_max as i32 + 1) / w;
    Ok(GfCheck { lhs: lhs.value(), rhs, tail_allowance })
}
