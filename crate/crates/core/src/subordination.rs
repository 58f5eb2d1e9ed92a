//! Sibuya steps and the subordinated waiting time, whose PGF shares the
//! denominator `(1 - z)^q + lam` with the renewal model but not the numerator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mittagleffler::{check_q, ProcessParams};
use crate::real::Real;
use crate::renewal::{h_neg_q, WaitingTimeDist};
use crate::series::{CompensatedSum, SeriesControl};

/// Largest gap between the two models still counted as "identical".
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Sibuya law `P(X = k) = (-1)^(k-1) C(q, k)`; `q = 1` is the unit step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SibuyaDist<T> {
    q: T,
}

impl<T: Real> SibuyaDist<T> {
    pub fn new(q: T) -> Result<Self> {
        check_q(q)?;
        Ok(Self { q })
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn pmf(&self, k: usize) -> Result<T> {
        if k == 0 {
            return Err(Error::Domain("Sibuya support starts at k = 1".into()));
        }
        Ok(*self.pmf_vec(k).last().expect("k >= 1"))
    }

    /// `P(X = k)` for `k = 1..=k_max`.
    pub fn pmf_vec(&self, k_max: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(k_max);
        let mut p = self.q;
        for k in 1..=k_max {
            out.push(p);
            let kf = T::from_usize_exact(k);
            p = p * (kf - self.q) / (kf + T::one());
        }
        out
    }

    /// `P(X > k) = Gamma(k + 1 - q) / (Gamma(1 - q) Gamma(k + 1))`.
    pub fn survival(&self, k: usize) -> Result<T> {
        if k == 0 {
            return Ok(T::one());
        }
        if self.q == T::one() {
            return Ok(T::zero());
        }
        h_neg_q(self.q, k + 1)
    }

    /// `1 - (1 - z)^q` on `[-1, 1]`.
    pub fn pgf(&self, z: T) -> Result<T> {
        check_z(z)?;
        Ok(T::one() - (T::one() - z).powf(self.q))
    }
}

fn check_z<T: Real>(z: T) -> Result<()> {
    if !(z >= -T::one() && z <= T::one()) {
        return Err(Error::Domain(format!("PGF argument must lie in [-1, 1], got {z}")));
    }
    Ok(())
}

pub fn sibuya_pmf<T: Real>(d: &SibuyaDist<T>, k: usize) -> Result<T> {
    d.pmf(k)
}

pub fn sibuya_survival<T: Real>(d: &SibuyaDist<T>, k: usize) -> Result<T> {
    d.survival(k)
}

pub fn sibuya_pgf<T: Real>(d: &SibuyaDist<T>, z: T) -> Result<T> {
    d.pgf(z)
}

/// `lam (1 - (1 - z)^q) / ((1 - z)^q + lam)`.
pub fn sub_wt_pgf<T: Real>(params: &ProcessParams<T>, z: T) -> Result<T> {
    params.validate()?;
    check_z(z)?;
    let wq = (T::one() - z).powf(params.q);
    Ok(params.lam * (T::one() - wq) / (wq + params.lam))
}

/// Subordinated waiting-time PMF for `u = 1..=u_max`: the geometric mixture
/// `sum_{n=1}^{u} p (1-p)^(n-1) P(X_1 + ... + X_n = u)`, `p = lam / (1 + lam)`.
pub fn sub_wt_pmf_vec<T: Real>(params: &ProcessParams<T>, u_max: usize, ctl: &SeriesControl<T>) -> Result<Vec<T>> {
    params.validate()?;
    ctl.validate()?;
    let p = params.p_geom();
    let step = SibuyaDist::new(params.q)?.pmf_vec(u_max);
    // power[i] = P(X_1 + ... + X_n = i + 1)
    let mut power = step.clone();
    let mut weight = p;
    let mut acc: Vec<CompensatedSum<T>> = vec![CompensatedSum::new(); u_max];
    for n in 1..=u_max {
        for i in (n - 1)..u_max {
            acc[i].add(weight * power[i]);
        }
        if n == u_max {
            break;
        }
        // next power; entries below index n are zero
        let mut next = vec![T::zero(); u_max];
        for (i, slot) in next.iter_mut().enumerate().skip(n) {
            let mut s = CompensatedSum::new();
            for j in (n - 1)..i {
                s.add(power[j] * step[i - j - 1]);
            }
            *slot = s.value();
        }
        power = next;
        weight = weight * (T::one() - p);
    }
    Ok(acc.iter().map(|a| a.value()).collect())
}

pub fn sub_wt_pmf<T: Real>(params: &ProcessParams<T>, u: usize, ctl: &SeriesControl<T>) -> Result<T> {
    if u == 0 {
        return Err(Error::Domain("waiting times start at u = 1".into()));
    }
    Ok(*sub_wt_pmf_vec(params, u, ctl)?.last().expect("u >= 1"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow<T> {
    pub u: usize,
    pub renewal: T,
    pub subordinated: T,
    pub abs_diff: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgfRow<T> {
    pub z: T,
    pub renewal: T,
    pub subordinated: T,
}

/// Side-by-side waiting-time laws of the two models.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelComparison<T> {
    pub params: ProcessParams<T>,
    pub rows: Vec<ComparisonRow<T>>,
    /// Both PGFs on `z = -1.0, -0.9, ..., 1.0`.
    pub pgf_rows: Vec<PgfRow<T>>,
    pub max_pmf_diff: T,
    pub max_pgf_diff: T,
    /// Gap below which the models count as identical.
    pub threshold: T,
    pub models_coincide: bool,
}

pub fn compare_models<T: Real>(
    params: &ProcessParams<T>,
    u_max: usize,
    ctl: &SeriesControl<T>,
) -> Result<ModelComparison<T>> {
    if u_max == 0 {
        return Err(Error::Domain("u_max must be >= 1".into()));
    }
    let wt = WaitingTimeDist::new(*params, *ctl)?;
    let renewal = wt.pmf_vec(u_max)?;
    let sub = sub_wt_pmf_vec(params, u_max, ctl)?;
    let rows: Vec<ComparisonRow<T>> = renewal
        .iter()
        .zip(&sub)
        .enumerate()
        .map(|(i, (&r, &s))| ComparisonRow { u: i + 1, renewal: r, subordinated: s, abs_diff: (r - s).abs() })
        .collect();
    let pgf_rows = (-10..=10)
        .map(|i| {
            let z = T::lit(i as f64 / 10.0);
            Ok(PgfRow { z, renewal: wt.pgf_closed(z)?, subordinated: sub_wt_pgf(params, z)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_pmf_diff = rows.iter().fold(T::zero(), |m, r| m.max(r.abs_diff));
    let max_pgf_diff = pgf_rows.iter().fold(T::zero(), |m, r| m.max((r.renewal - r.subordinated).abs()));
    let threshold = T::lit(COINCIDENCE_TOL);
    let models_coincide = max_pmf_diff <= threshold && max_pgf_diff <= threshold;
    let expected = params.q == T::one();
    if models_coincide != expected || (!expected && rows[0].abs_diff <= threshold) {
        return Err(Error::Range(format!(
            "model comparison at q = {} contradicts the q = 1 coincidence rule (max gap {})",
            params.q, max_pmf_diff
        )));
    }
    Ok(ModelComparison { params: *params, rows, pgf_rows, max_pmf_diff, max_pgf_diff, threshold, models_coincide })
}
