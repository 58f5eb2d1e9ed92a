//! Samplers for both waiting-time models and a parallel path simulator.
//!
//! Path `i` draws from ChaCha8 stream `i` of the run seed, so results do not
//! depend on how paths are spread over worker threads.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mittagleffler::{check_q, ProcessParams, SurvivalTable};
use crate::special::{gamma_ratio, ln_gamma};

/// Largest value a sampler will return before reporting overflow.
pub const SAMPLE_LIMIT: u64 = 1 << 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub horizon: usize,
    pub workers: usize,
    /// Length of the precomputed survival table.
    pub table_cap: usize,
}

impl SamplerConfig {
    pub const DEFAULT_TABLE_CAP: usize = 1 << 16;

    pub fn new(seed: u64, n_paths: usize, horizon: usize, workers: usize) -> Result<Self> {
        let cfg = Self { seed, n_paths, horizon, workers, table_cap: Self::DEFAULT_TABLE_CAP.max(horizon) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.horizon == 0 || self.workers == 0 {
            return Err(Error::InvalidParams("n_paths, horizon and workers must be >= 1".into()));
        }
        if self.table_cap < self.horizon {
            return Err(Error::InvalidParams(format!(
                "table_cap {} is shorter than the horizon {}",
                self.table_cap, self.horizon
            )));
        }
        Ok(())
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// i.i.d. discrete Mittag-Leffler waiting times
    Renewal,
    /// geometric number of Sibuya steps per waiting time
    Subordinated,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Renewal => "renewal",
            Model::Subordinated => "subordinated",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "renewal" => Ok(Model::Renewal),
            "subordinated" => Ok(Model::Subordinated),
            _ => Err(Error::InvalidParams(format!("unknown model {s:?}"))),
        }
    }
}

/// One simulated trajectory up to the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathRecord {
    /// Strictly increasing event times in `1..=horizon`.
    pub event_times: Vec<u64>,
}

impl PathRecord {
    /// `N(t)`, the number of events at or before `t`.
    pub fn count_at(&self, t: u64) -> usize {
        self.event_times.partition_point(|&s| s <= t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub t: usize,
    pub n: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl McEstimate {
    fn from_count(t: usize, n: usize, hits: u64, n_paths: usize) -> Self {
        let p_hat = hits as f64 / n_paths as f64;
        Self { t, n, p_hat, stderr: (p_hat * (1.0 - p_hat) / n_paths as f64).sqrt(), n_paths }
    }

    /// `(p_hat - exact) / stderr`; zero when both agree exactly.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = self.p_hat - exact;
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Uniform on `(0, 1]`.
fn unit_open_low<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// `ln P(X > k)` for a Sibuya variable with `0 < q < 1`.
fn sibuya_log_survival(q: f64, ln_gamma_1mq: f64, k: u64) -> f64 {
    gamma_ratio(k as f64 + 1.0, -q).expect("k + 1 - q > 0").log_abs() - ln_gamma_1mq
}

/// Sibuya variate `min{k : P(X > k) < u}`, or `None` if it exceeds `cap`.
fn sibuya_inverse(q: f64, u: f64, cap: u64) -> Option<u64> {
    if q == 1.0 {
        return Some(1);
    }
    const SCAN: u64 = 32;
    let mut surv = 1.0;
    for k in 1..=SCAN.min(cap) {
        surv *= 1.0 - q / k as f64;
        if surv < u {
            return Some(k);
        }
    }
    if cap <= SCAN {
        return None;
    }
    let lg = ln_gamma(1.0 - q).expect("1 - q > 0");
    let lu = u.ln();
    let below = |k: u64| sibuya_log_survival(q, lg, k) < lu;
    let (mut lo, mut hi) = (SCAN, 2 * SCAN);
    while !below(hi.min(cap)) {
        if hi >= cap {
            return None;
        }
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    let mut hi = hi.min(cap);
    // P(X > lo) >= u > P(X > hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// One Sibuya draw by inversion of the closed-form survival function.
pub fn sample_sibuya<R: Rng + ?Sized>(q: f64, rng: &mut R) -> Result<u64> {
    check_q(q)?;
    sibuya_inverse(q, unit_open_low(rng), SAMPLE_LIMIT).ok_or(Error::TableOverflow { limit: SAMPLE_LIMIT })
}

/// Inverse-CDF sampler for either model's waiting time.
#[derive(Debug, Clone)]
pub struct WaitingTimeSampler {
    params: ProcessParams<f64>,
    table: Arc<SurvivalTable<f64>>,
    /// `K` in `T = 1 + X_1 + ... + X_K`, failures before the first success.
    geom: Geometric,
}

impl WaitingTimeSampler {
    pub fn new(params: ProcessParams<f64>, table_cap: usize) -> Result<Self> {
        params.validate()?;
        let table = Arc::new(SurvivalTable::new(params, table_cap + 1)?);
        let geom = Geometric::new(params.p_geom())
            .map_err(|e| Error::InvalidParams(format!("geometric law: {e}")))?;
        Ok(Self { params, table, geom })
    }

    pub fn params(&self) -> &ProcessParams<f64> {
        &self.params
    }

    /// Tabulated survival `P(T > t)` for `t <= table_cap`.
    pub fn table(&self) -> &SurvivalTable<f64> {
        &self.table
    }

    /// Largest `t` with a tabulated survival value.
    pub fn cap(&self) -> usize {
        self.table.len() - 1
    }

    /// `min{t >= 1 : P(T > t) < u}` if that is at most `limit <= cap`.
    fn invert_within(&self, u: f64, limit: usize) -> Option<u64> {
        let tail = &self.table.tail_values()[..limit];
        // tail[i] = P(T > i + 1) is non-increasing
        let i = tail.partition_point(|&s| s >= u);
        (i < limit).then_some(i as u64 + 1)
    }

    /// Renewal-model waiting time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let u = unit_open_low(rng);
        if let Some(t) = self.invert_within(u, self.cap()) {
            return Ok(t);
        }
        // Beyond the table: T given T > cap, by rejection from the compound
        // form T = 1 + X_1 + ... + X_K. Each round succeeds with probability
        // P(T > cap), the same probability with which this branch is entered.
        let cap = self.cap() as u64;
        loop {
            let t = self.sample_compound(rng)?;
            if t > cap {
                return Ok(t);
            }
        }
    }

    fn sample_compound<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let k = self.geom.sample(rng);
        let mut t: u64 = 1;
        for _ in 0..k {
            let x = sample_sibuya(self.params.q, rng)?;
            t = t.checked_add(x).filter(|&v| v <= SAMPLE_LIMIT).ok_or(Error::TableOverflow { limit: SAMPLE_LIMIT })?;
        }
        Ok(t)
    }

    /// Subordinated-model waiting time: `N >= 1` geometric Sibuya steps.
    pub fn sample_subordinated<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        self.subordinated_within(rng, SAMPLE_LIMIT)
            .and_then(|v| v.ok_or(Error::TableOverflow { limit: SAMPLE_LIMIT }))
    }

    /// Subordinated waiting time if it is at most `limit`, else `None`.
    fn subordinated_within<R: Rng + ?Sized>(&self, rng: &mut R, limit: u64) -> Result<Option<u64>> {
        let steps = 1 + self.geom.sample(rng);
        let mut t: u64 = 0;
        for _ in 0..steps {
            match sibuya_inverse(self.params.q, unit_open_low(rng), limit - t) {
                Some(x) if t + x <= limit => t += x,
                _ => return Ok(None),
            }
        }
        Ok(Some(t))
    }

    /// Next waiting time for `model` if it is at most `limit`, else `None`.
    fn next_within<R: Rng + ?Sized>(&self, model: Model, rng: &mut R, limit: usize) -> Result<Option<u64>> {
        match model {
            Model::Renewal => Ok(self.invert_within(unit_open_low(rng), limit)),
            Model::Subordinated => self.subordinated_within(rng, limit as u64),
        }
    }

    fn path<R: Rng + ?Sized>(&self, model: Model, rng: &mut R, horizon: usize) -> Result<PathRecord> {
        let mut event_times = Vec::new();
        let mut now = 0usize;
        while now < horizon {
            match self.next_within(model, rng, horizon - now)? {
                Some(w) => {
                    now += w as usize;
                    event_times.push(now as u64);
                }
                None => break,
            }
        }
        Ok(PathRecord { event_times })
    }
}

pub fn sample_waiting_time<R: Rng + ?Sized>(sampler: &WaitingTimeSampler, rng: &mut R) -> Result<u64> {
    sampler.sample(rng)
}

/// Path simulator bound to one configuration and model.
#[derive(Debug, Clone)]
pub struct PathSimulator {
    cfg: SamplerConfig,
    model: Model,
    sampler: WaitingTimeSampler,
}

impl PathSimulator {
    pub fn new(params: ProcessParams<f64>, cfg: SamplerConfig, model: Model) -> Result<Self> {
        cfg.validate()?;
        // the subordinated model never consults the table beyond the horizon
        let cap = if model == Model::Renewal { cfg.table_cap } else { cfg.horizon };
        Ok(Self { cfg, model, sampler: WaitingTimeSampler::new(params, cap)? })
    }

    /// Path `i`, identical however it is scheduled.
    pub fn path(&self, i: usize) -> Result<PathRecord> {
        let mut rng = self.cfg.rng(i);
        self.sampler.path(self.model, &mut rng, self.cfg.horizon)
    }

    /// Lazily simulated paths `0..n_paths`, in order.
    pub fn iter(&self) -> impl Iterator<Item = Result<PathRecord>> + '_ {
        (0..self.cfg.n_paths).map(move |i| self.path(i))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
    }

    /// All paths, computed on `workers` threads.
    pub fn run(&self) -> Result<Vec<PathRecord>> {
        self.pool()?.install(|| (0..self.cfg.n_paths).into_par_iter().map(|i| self.path(i)).collect())
    }

    /// Histogram of `N(t)` over all paths, bucket `n_max + 1` holding the rest.
    pub fn count_histogram(&self, t: usize, n_max: usize) -> Result<Vec<u64>> {
        if t > self.cfg.horizon {
            return Err(Error::Domain(format!("t = {t} beyond horizon {}", self.cfg.horizon)));
        }
        let zero = || vec![0u64; n_max + 2];
        self.pool()?.install(|| {
            (0..self.cfg.n_paths)
                .into_par_iter()
                .try_fold(zero, |mut h, i| {
                    let n = self.path(i)?.count_at(t as u64);
                    h[n.min(n_max + 1)] += 1;
                    Ok(h)
                })
                .try_reduce(zero, |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                })
        })
    }

    /// Histogram of the first waiting time over `1..=horizon`; bucket 0
    /// counts draws beyond the horizon.
    pub fn waiting_time_histogram(&self) -> Result<Vec<u64>> {
        let h = self.cfg.horizon;
        let zero = || vec![0u64; h + 1];
        self.pool()?.install(|| {
            (0..self.cfg.n_paths)
                .into_par_iter()
                .try_fold(zero, |mut acc, i| {
                    let mut rng = self.cfg.rng(i);
                    let w = self.sampler.next_within(self.model, &mut rng, h)?;
                    acc[w.map_or(0, |w| w as usize)] += 1;
                    Ok(acc)
                })
                .try_reduce(zero, |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                })
        })
    }
}

/// Simulates `cfg.n_paths` independent trajectories up to `cfg.horizon`.
pub fn simulate_paths(params: &ProcessParams<f64>, cfg: &SamplerConfig, model: Model) -> Result<Vec<PathRecord>> {
    PathSimulator::new(*params, *cfg, model)?.run()
}

/// Empirical `P(N(t) = n)` for `n = 0..=n_max`.
pub fn mc_count_estimate(
    params: &ProcessParams<f64>,
    cfg: &SamplerConfig,
    t: usize,
    n_max: usize,
    model: Model,
) -> Result<Vec<McEstimate>> {
    let hist = PathSimulator::new(*params, *cfg, model)?.count_histogram(t, n_max)?;
    Ok((0..=n_max).map(|n| McEstimate::from_count(t, n, hist[n], cfg.n_paths)).collect())
}

/// Empirical `P(T = u)` for `u = 1..=cfg.horizon`, reported with `t = u`, `n = 1`.
pub fn mc_waiting_time_estimate(
    params: &ProcessParams<f64>,
    cfg: &SamplerConfig,
    model: Model,
) -> Result<Vec<McEstimate>> {
    let hist = PathSimulator::new(*params, *cfg, model)?.waiting_time_histogram()?;
    Ok((1..=cfg.horizon).map(|u| McEstimate::from_count(u, 1, hist[u], cfg.n_paths)).collect())
}
