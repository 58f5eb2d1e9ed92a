//! Discrete-time fractional Poisson process.
//!
//! Events are separated by i.i.d. waiting times `T >= 1` with survival
//! function `P(T > t) = F_{q,-lam}(t)`, the discrete Mittag-Leffler function.
//! The crate covers the discrete fractional calculus underneath
//! ([`fraccalc`]), the waiting-time law ([`mittagleffler`], [`renewal`]), the
//! event-count law ([`counting`]), the Sibuya-subordinated alternative
//! ([`subordination`]) and Monte Carlo simulation ([`montecarlo`]).
//!
//! Numerical kernels are generic over the scalar ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it to `f64`.

pub mod counting;
pub mod error;
pub mod expansion;
pub mod fraccalc;
pub mod mittagleffler;
pub mod montecarlo;
pub mod real;
pub mod renewal;
pub mod series;
pub mod signed_log;
pub mod special;
pub mod subordination;

pub use counting::{count_gf_check, count_pmf_exact, count_pmf_exact_result, count_pmf_oracle, count_table};
pub use error::{Error, Result};
pub use fraccalc::{
    fractional_difference_caputo, fractional_difference_rl, fractional_sum, gbc, gbc_value, nabla,
    rising_factorial, rising_factorial_value,
};
pub use mittagleffler::{ml_eval, ml_eval_range, ml_survival};
pub use montecarlo::{
    mc_count_estimate, mc_waiting_time_estimate, sample_sibuya, sample_waiting_time, simulate_paths, McEstimate,
    Model, PathRecord, SamplerConfig, WaitingTimeSampler,
};
pub use real::Real;
pub use renewal::{wt_cdf, wt_partial_mean, wt_pgf_closed, wt_pgf_derivative, wt_pgf_series, wt_pmf};
pub use subordination::{compare_models, sibuya_pgf, sibuya_pmf, sibuya_survival, sub_wt_pgf, sub_wt_pmf, sub_wt_pmf_vec};

pub type SignedLogValue = signed_log::SignedLogValue<f64>;
pub type GridFunction = fraccalc::GridFunction<f64>;
pub type ProcessParams = mittagleffler::ProcessParams<f64>;
pub type SeriesControl = series::SeriesControl<f64>;
pub type SeriesResult = series::SeriesResult<f64>;
pub type SurvivalTable = mittagleffler::SurvivalTable<f64>;
pub type WaitingTimeDist = renewal::WaitingTimeDist<f64>;
pub type PgfSeries = renewal::PgfSeries<f64>;
pub type CountPmfQuery = counting::CountPmfQuery<f64>;
pub type PmfTable = counting::PmfTable<f64>;
pub type GfCheck = counting::GfCheck<f64>;
pub type SibuyaDist = subordination::SibuyaDist<f64>;
pub type ModelComparison = subordination::ModelComparison<f64>;
