use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use dfpp::counting::CountPmfQuery;
use dfpp::montecarlo::PathSimulator;
use dfpp::{
    count_gf_check, count_pmf_exact_result, count_table, gbc, ml_eval, mc_count_estimate, mc_waiting_time_estimate,
    sub_wt_pmf_vec, compare_models, Error, McEstimate, Model, ProcessParams, SamplerConfig, SeriesControl,
    SibuyaDist, WaitingTimeDist,
};

use crate::table::{Cell, Format, Table};
use crate::{Cli, Command, ProcessArgs, SimArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Renewal,
    Subordinated,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Renewal => Model::Renewal,
            ModelArg::Subordinated => Model::Subordinated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Count,
    WaitingTime,
}

#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 3 for numerical failures, 2 for rejected input, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
        }
    }

    /// One-line JSON object for stderr.
    pub fn diagnostic(&self) -> String {
        let (detail, message) = match self {
            CliError::Lib(e) => (serde_json::to_value(e).unwrap_or_default(), e.to_string()),
            CliError::Usage(m) => (serde_json::json!({ "kind": "usage" }), m.clone()),
            CliError::Io(m) => (serde_json::json!({ "kind": "io" }), m.clone()),
        };
        serde_json::json!({ "error": detail, "message": message }).to_string()
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn params(p: &ProcessArgs) -> Res<ProcessParams> {
    Ok(ProcessParams::new(p.q, p.lam)?)
}

fn sampler_config(s: &SimArgs) -> Res<SamplerConfig> {
    Ok(SamplerConfig::new(s.seed, s.paths, s.horizon, s.workers)?)
}

pub fn run(cli: &Cli) -> Res<()> {
    let ctl = SeriesControl { rel_tol: cli.tol, max_terms: cli.max_terms, max_limbs: cli.max_limbs, ..SeriesControl::default() };
    ctl.validate()?;
    let table = build(&cli.command, &ctl, cli.format)?;
    emit(&table, cli.format, cli.out.as_deref())
}

fn emit(table: &Table, format: Format, out: Option<&Path>) -> Res<()> {
    let text = table.render(format)?;
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn build(cmd: &Command, ctl: &SeriesControl, format: Format) -> Res<Table> {
    match cmd {
        Command::Hfun { alpha, x } => {
            let mut t = Table::new(&["alpha", "x", "value"]);
            for &xv in x {
                let v = gbc(*alpha, xv)?.to_real()?;
                t.push(vec![(*alpha).into(), xv.into(), v.into()]);
            }
            Ok(t)
        }
        Command::Ml { q, lam, t } => {
            let mut out = Table::new(&["t", "value", "terms_used", "max_partial_abs", "converged", "limbs"]);
            for &tv in t {
                let r = ml_eval(*q, *lam, tv, ctl)?;
                out.push(vec![
                    tv.into(),
                    r.value.into(),
                    r.terms_used.into(),
                    r.max_partial_abs.into(),
                    r.converged.into(),
                    r.limbs.into(),
                ]);
            }
            Ok(out)
        }
        Command::WtPmf { process, u_max } => {
            let d = WaitingTimeDist::new(params(process)?, *ctl)?;
            let pmf = d.pmf_vec(*u_max)?;
            let mut t = Table::new(&["u", "pmf", "cdf"]);
            for (i, p) in pmf.into_iter().enumerate() {
                t.push(vec![(i + 1).into(), p.into(), d.cdf(i + 1)?.into()]);
            }
            Ok(t)
        }
        Command::WtPgf { process, z, u_max } => {
            let d = WaitingTimeDist::new(params(process)?, *ctl)?;
            let mut t = match u_max {
                Some(_) => Table::new(&["z", "closed", "derivative", "series", "tail_bound"]),
                None => Table::new(&["z", "closed", "derivative"]),
            };
            for &zv in z {
                let mut row: Vec<Cell> = vec![zv.into(), d.pgf_closed(zv)?.into(), d.pgf_derivative(zv)?.into()];
                if let Some(u) = u_max {
                    let s = d.pgf_series(zv, *u)?;
                    row.extend([s.value.into(), s.tail_bound.into()]);
                }
                t.push(row);
            }
            Ok(t)
        }
        Command::WtMean { process, t_max } => {
            let d = WaitingTimeDist::new(params(process)?, *ctl)?;
            let mut t = Table::new(&["t_max", "partial_mean", "lower_bound"]);
            for &m in t_max {
                t.push(vec![m.into(), d.partial_mean(m)?.into(), d.partial_mean_lower(m)?.into()]);
            }
            Ok(t)
        }
        Command::CountPmf { process, t, n } => {
            let p = params(process)?;
            let mut out = Table::new(&["n", "prob", "terms_used", "converged"]);
            for &nv in n {
                let r = count_pmf_exact_result(&CountPmfQuery { params: p, t: *t, n: nv, ctl: *ctl })?;
                out.push(vec![nv.into(), r.value.into(), r.terms_used.into(), r.converged.into()]);
            }
            Ok(out)
        }
        Command::CountTable { process, t, n_max } => {
            let tab = count_table(&params(process)?, *t, n_max.unwrap_or(*t), ctl)?;
            let mut out = Table::new(&["n", "prob", "terms_used", "converged"]);
            for (n, (p, r)) in tab.probs.iter().zip(&tab.diagnostics).enumerate() {
                out.push(vec![n.into(), (*p).into(), r.terms_used.into(), r.converged.into()]);
            }
            Ok(out)
        }
        Command::CountGfCheck { process, n, z, t_max } => {
            let g = count_gf_check(&params(process)?, *n, *z, *t_max, ctl)?;
            // per-term truncation errors, summed against z^t
            let slack = 10.0 * ctl.rel_tol / (1.0 - z);
            let mut out = Table::new(&["n", "z", "t_max", "lhs", "rhs", "tail_allowance", "agrees"]);
            out.push(vec![
                (*n).into(),
                (*z).into(),
                (*t_max).into(),
                g.lhs.into(),
                g.rhs.into(),
                g.tail_allowance.into(),
                g.agrees(slack).into(),
            ]);
            Ok(out)
        }
        Command::Sibuya { q, k_max } => {
            let d = SibuyaDist::new(*q)?;
            let mut t = Table::new(&["k", "pmf", "survival"]);
            for (i, p) in d.pmf_vec(*k_max).into_iter().enumerate() {
                t.push(vec![(i + 1).into(), p.into(), d.survival(i + 1)?.into()]);
            }
            Ok(t)
        }
        Command::CompareModels { process, u_max, pgf_out } => {
            let c = compare_models(&params(process)?, *u_max, ctl)?;
            let mut t = Table::new(&["u", "renewal", "subordinated", "diff"]);
            for r in &c.rows {
                t.push(vec![r.u.into(), r.renewal.into(), r.subordinated.into(), r.abs_diff.into()]);
            }
            if let Some(path) = pgf_out {
                let mut g = Table::new(&["z", "renewal", "subordinated"]);
                for r in &c.pgf_rows {
                    g.push(vec![r.z.into(), r.renewal.into(), r.subordinated.into()]);
                }
                emit(&g, format, Some(path))?;
            }
            Ok(t)
        }
        Command::Simulate { sim } => {
            let sim_run = PathSimulator::new(params(&sim.process)?, sampler_config(sim)?, sim.model.into())?;
            let paths = sim_run.run()?;
            let mut t = Table::new(&["path", "n_events", "event_times"]);
            for (i, p) in paths.iter().enumerate() {
                let times: Vec<String> = p.event_times.iter().map(u64::to_string).collect();
                t.push(vec![i.into(), p.event_times.len().into(), times.join(";").into()]);
            }
            Ok(t)
        }
        Command::McCompare { sim, quantity, t, n_max } => mc_compare(sim, *quantity, *t, *n_max, ctl),
    }
}

fn mc_compare(sim: &SimArgs, quantity: Quantity, t: Option<usize>, n_max: usize, ctl: &SeriesControl) -> Res<Table> {
    let p = params(&sim.process)?;
    let cfg = sampler_config(sim)?;
    let model: Model = sim.model.into();
    let (first, est, exact): (&'static str, Vec<McEstimate>, Vec<f64>) = match quantity {
        Quantity::Count => {
            if model != Model::Renewal {
                return Err(CliError::Usage(
                    "exact count probabilities exist only for the renewal model; use --quantity waiting-time".into(),
                ));
            }
            let t = t.unwrap_or(cfg.horizon);
            let est = mc_count_estimate(&p, &cfg, t, n_max, model)?;
            let exact = count_table(&p, t, n_max, ctl)?.probs;
            ("n", est, exact)
        }
        Quantity::WaitingTime => {
            let est = mc_waiting_time_estimate(&p, &cfg, model)?;
            let exact = match model {
                Model::Renewal => WaitingTimeDist::new(p, *ctl)?.pmf_vec(cfg.horizon)?,
                Model::Subordinated => sub_wt_pmf_vec(&p, cfg.horizon, ctl)?,
            };
            ("u", est, exact)
        }
    };
    let mut out = Table::new(&[first, "p_hat", "stderr", "exact", "z_score"]);
    for (e, x) in est.iter().zip(exact) {
        let key = if first == "n" { e.n } else { e.t };
        out.push(vec![key.into(), e.p_hat.into(), e.stderr.into(), x.into(), e.z_score(x).into()]);
    }
    Ok(out)
}
