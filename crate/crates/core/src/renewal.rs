//! The waiting time `T` between events: PMF, CDF, generating function and
//! truncated means.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fraccalc::gbc;
use crate::mittagleffler::{clamp_unit, ProcessParams, SharedSurvival};
use crate::real::Real;
use crate::series::{evaluate, CompensatedSum, HPart, HSeries, SeriesCache, SeriesControl, SeriesResult};

/// Law of a single waiting time, with a lazily grown survival table.
#[derive(Debug, Clone)]
pub struct WaitingTimeDist<T> {
    params: ProcessParams<T>,
    ctl: SeriesControl<T>,
    survival: SharedSurvival<T>,
}

/// Partial PGF sum with a bound on the neglected remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgfSeries<T> {
    pub value: T,
    pub tail_bound: T,
}

impl<T: Real> WaitingTimeDist<T> {
    pub fn new(params: ProcessParams<T>, ctl: SeriesControl<T>) -> Result<Self> {
        params.validate()?;
        ctl.validate()?;
        let survival = SharedSurvival::new(params, 256)?;
        Ok(Self { params, ctl, survival })
    }

    pub fn params(&self) -> &ProcessParams<T> {
        &self.params
    }

    pub fn control(&self) -> &SeriesControl<T> {
        &self.ctl
    }

    /// `P(T > t)`.
    pub fn survival(&self, t: usize) -> Result<T> {
        clamp_unit(self.survival.get(t), self.ctl.clamp_band())
    }

    /// `P(T > t)` for `t = 0..=t_max`.
    pub fn survival_vec(&self, t_max: usize) -> Result<Vec<T>> {
        let tab = self.survival.covering(t_max + 1);
        let band = self.ctl.clamp_band();
        (0..=t_max).map(|t| clamp_unit(tab.get(t).expect("covered"), band)).collect()
    }

    /// `P(T = u) = P(T > u - 1) - P(T > u)`.
    pub fn pmf(&self, u: usize) -> Result<T> {
        if u == 0 {
            return Err(Error::Domain("waiting times start at u = 1".into()));
        }
        let tab = self.survival.covering(u + 1);
        let d = tab.get(u - 1).expect("covered") - tab.get(u).expect("covered");
        clamp_probability(d, self.ctl.clamp_band())
    }

    /// `P(T = u)` for `u = 1..=u_max`.
    pub fn pmf_vec(&self, u_max: usize) -> Result<Vec<T>> {
        let tab = self.survival.covering(u_max + 1);
        let band = self.ctl.clamp_band();
        (1..=u_max)
            .map(|u| clamp_probability(tab.get(u - 1).unwrap() - tab.get(u).unwrap(), band))
            .collect()
    }

    /// `P(T = u)` from its own series `lam sum_m h_{q(m+1)-1}(u) (-lam)^m`,
    /// independent of the survival table.
    pub fn pmf_series(&self, u: usize) -> Result<SeriesResult<T>> {
        if u == 0 {
            return Err(Error::Domain("waiting times start at u = 1".into()));
        }
        let ProcessParams { q, lam } = self.params;
        if u == 1 {
            return Ok(SeriesResult::exact(lam / (T::one() + lam)));
        }
        if q == T::one() {
            let p = self.params.p_geom();
            return Ok(SeriesResult::exact(p * (T::one() - p).powi(u as i32 - 1)));
        }
        let hs = HSeries {
            q,
            x: -lam,
            order: 0,
            s: u,
            k0: 0,
            parts: vec![HPart { weight: T::one(), shift: 1, minus_one: true }],
        };
        let mut cache = SeriesCache::new(q, &[u]);
        let r = evaluate(&hs, &self.ctl, &mut cache)?.scaled(lam);
        Ok(SeriesResult { value: clamp_probability(r.value, self.ctl.clamp_band())?, ..r })
    }

    /// `P(T <= t)`.
    pub fn cdf(&self, t: usize) -> Result<T> {
        Ok(T::one() - self.survival(t)?)
    }

    /// `E[z^T] = lam z / ((1 - z)^q + lam)` on `[-1, 1]`.
    pub fn pgf_closed(&self, z: T) -> Result<T> {
        check_z(z)?;
        if z == T::one() {
            return Ok(T::one());
        }
        let ProcessParams { q, lam } = self.params;
        Ok(lam * z / ((T::one() - z).powf(q) + lam))
    }

    /// Analytic derivative of [`pgf_closed`](Self::pgf_closed). At `z = 1` it
    /// is the mean: `1 + 1/lam` for `q = 1`, infinite otherwise.
    pub fn pgf_derivative(&self, z: T) -> Result<T> {
        check_z(z)?;
        let ProcessParams { q, lam } = self.params;
        let w = T::one() - z;
        if z == T::one() {
            return Ok(if q == T::one() { T::one() + T::one() / lam } else { T::infinity() });
        }
        let wq = w.powf(q);
        let den = wq + lam;
        Ok((lam * wq + lam * lam + lam * q * z * w.powf(q - T::one())) / (den * den))
    }

    /// `sum_{u=1}^{u_max} z^u P(T = u)` and the remainder bound
    /// `z^(u_max+1) / (1 - z) * P(T > u_max)`, for `0 <= z < 1`.
    pub fn pgf_series(&self, z: T, u_max: usize) -> Result<PgfSeries<T>> {
        if !(z >= T::zero() && z < T::one()) {
            return Err(Error::Domain(format!("series PGF needs 0 <= z < 1, got {z}")));
        }
        let pmf = self.pmf_vec(u_max)?;
        let mut acc = CompensatedSum::new();
        let mut zu = T::one();
        for p in pmf {
            zu = zu * z;
            acc.add(zu * p);
        }
        let tail_bound = zu * z / (T::one() - z) * self.survival(u_max)?;
        Ok(PgfSeries { value: acc.value(), tail_bound })
    }

    /// `E[min(T, t_max)] = sum_{u <= t_max} u P(T = u) + t_max P(T > t_max)`.
    pub fn partial_mean(&self, t_max: usize) -> Result<T> {
        if t_max == 0 {
            return Err(Error::Domain("t_max must be >= 1".into()));
        }
        // equal to sum_{t < t_max} P(T > t), which avoids the differences
        let s = self.survival_vec(t_max)?;
        Ok(s[..t_max].iter().copied().collect::<CompensatedSum<T>>().value())
    }

    /// `sum_{u <= t_max} u P(T = u)`, a strict lower bound on the mean.
    pub fn partial_mean_lower(&self, t_max: usize) -> Result<T> {
        if t_max == 0 {
            return Err(Error::Domain("t_max must be >= 1".into()));
        }
        let pmf = self.pmf_vec(t_max)?;
        Ok(pmf
            .iter()
            .enumerate()
            .map(|(i, &p)| T::from_usize_exact(i + 1) * p)
            .collect::<CompensatedSum<T>>()
            .value())
    }
}

fn check_z<T: Real>(z: T) -> Result<()> {
    if !(z >= -T::one() && z <= T::one()) {
        return Err(Error::Domain(format!("PGF argument must lie in [-1, 1], got {z}")));
    }
    Ok(())
}

/// Rounds tiny negatives to zero; anything below `-band` is an error.
pub(crate) fn clamp_probability<T: Real>(v: T, band: T) -> Result<T> {
    if v < -band {
        return Err(Error::NegativeProbability {
            value: v.to_f64().unwrap_or(f64::NAN),
            band: band.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(v.max(T::zero()))
}

/// `h_{-q}(t) = P(X >= t)` for a Sibuya variable, used by several callers.
pub(crate) fn h_neg_q<T: Real>(q: T, t: usize) -> Result<T> {
    gbc(-q, T::from_usize_exact(t))?.to_real()
}

/// Free-function forms of the [`WaitingTimeDist`] methods.
pub fn wt_pmf<T: Real>(d: &WaitingTimeDist<T>, u: usize) -> Result<T> {
    d.pmf(u)
}

pub fn wt_cdf<T: Real>(d: &WaitingTimeDist<T>, t: usize) -> Result<T> {
    d.cdf(t)
}

pub fn wt_pgf_closed<T: Real>(d: &WaitingTimeDist<T>, z: T) -> Result<T> {
    d.pgf_closed(z)
}

pub fn wt_pgf_derivative<T: Real>(d: &WaitingTimeDist<T>, z: T) -> Result<T> {
    d.pgf_derivative(z)
}

pub fn wt_pgf_series<T: Real>(d: &WaitingTimeDist<T>, z: T, u_max: usize) -> Result<PgfSeries<T>> {
    d.pgf_series(z, u_max)
}

pub fn wt_partial_mean<T: Real>(d: &WaitingTimeDist<T>, t_max: usize) -> Result<T> {
    d.partial_mean(t_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(q: f64, lam: f64) -> WaitingTimeDist<f64> {
        WaitingTimeDist::new(ProcessParams::new(q, lam).unwrap(), SeriesControl::default()).unwrap()
    }

    #[test]
    fn pmf_examples() {
        let d = dist(1.0, 0.5);
        assert!((d.pmf(3).unwrap() - 4.0 / 27.0).abs() < 1e-16);
        for &(q, lam) in &[(0.3, 0.1), (0.5, 0.5), (0.9, 0.9)] {
            let d = dist(q, lam);
            assert!((d.pmf(1).unwrap() - lam / (1.0 + lam)).abs() < 1e-15);
        }
        let d = dist(0.5, 0.5);
        assert!((d.pmf(4).unwrap() - 0.044_753_086_419_753_086_42).abs() < 1e-16);
        assert!(d.pmf(0).is_err());
    }

    #[test]
    fn series_route_agrees() {
        for &(q, lam) in &[(0.3, 0.5), (0.5, 0.5), (0.7, 0.9)] {
            let d = dist(q, lam);
            for u in 1..=25 {
                let a = d.pmf(u).unwrap();
                let b = d.pmf_series(u).unwrap().value;
                assert!((a - b).abs() < 1e-12, "q={q} lam={lam} u={u}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn cdf_examples() {
        let d = dist(1.0, 0.5);
        assert_eq!(d.cdf(0).unwrap(), 0.0);
        assert!((d.cdf(1).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((d.cdf(5).unwrap() - (1.0 - 1.5f64.powi(-5))).abs() < 1e-15);
    }

    #[test]
    fn pgf_examples() {
        let d = dist(0.5, 0.5);
        assert_eq!(d.pgf_closed(0.0).unwrap(), 0.0);
        assert_eq!(d.pgf_closed(1.0).unwrap(), 1.0);
        assert!((d.pgf_closed(0.5).unwrap() - 0.207_106_781_186_547_524_4).abs() < 1e-15);
        assert!(d.pgf_closed(1.0 + 1e-12).is_err());
        assert!(d.pgf_closed(-1.0).is_ok());
        let s = d.pgf_series(0.0, 10).unwrap();
        assert_eq!((s.value, s.tail_bound), (0.0, 0.0));
    }

    #[test]
    fn pgf_series_brackets_closed_form() {
        let d = dist(1.0, 0.5);
        let s = d.pgf_series(0.4, 80).unwrap();
        assert!((s.value - d.pgf_closed(0.4).unwrap()).abs() < 1e-10);
        let d = dist(0.6, 0.3);
        let s = d.pgf_series(0.5, 200).unwrap();
        let c = d.pgf_closed(0.5).unwrap();
        assert!(c - s.value >= -1e-15 && c - s.value <= s.tail_bound);
    }

    #[test]
    fn mean_examples() {
        let d = dist(1.0, 0.5);
        assert!((d.partial_mean(500).unwrap() - 3.0).abs() < 1e-6);
        assert!((d.partial_mean(1).unwrap() - 1.0).abs() < 1e-15);
        let d = dist(0.5, 0.5);
        assert!(d.partial_mean(10_000).unwrap() > d.partial_mean(1000).unwrap());
        assert!(d.partial_mean_lower(100).unwrap() < d.partial_mean(100).unwrap());
    }

    #[test]
    fn derivative_at_one() {
        assert!((dist(1.0, 0.5).pgf_derivative(1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(dist(0.5, 0.5).pgf_derivative(1.0).unwrap().is_infinite());
    }

    #[test]
    fn clamp_band_is_enforced() {
        assert_eq!(clamp_probability(-1e-13, 1e-11).unwrap(), 0.0);
        assert!(matches!(clamp_probability(-1e-9, 1e-11), Err(Error::NegativeProbability { .. })));
    }

    #[test]
    fn h_neg_q_is_sibuya_survival() {
        assert!((h_neg_q(0.5, 2).unwrap() - 0.5_f64).abs() < 1e-15);
        assert!((h_neg_q(0.5, 3).unwrap() - 0.375_f64).abs() < 1e-15);
    }
}
