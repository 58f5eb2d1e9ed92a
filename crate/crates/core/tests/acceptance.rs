//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the lines reach the console.

use std::time::{Duration, Instant};

use dfpp::counting::CountPmfQuery;
use dfpp::{
    count_gf_check, count_pmf_exact, count_pmf_oracle, count_table, fractional_difference_rl, gbc_value,
    mc_count_estimate, ml_eval_range, ml_survival, sub_wt_pgf, sub_wt_pmf, GridFunction, Model, ProcessParams,
    SamplerConfig, SeriesControl, SibuyaDist, WaitingTimeDist,
};

const QS: [f64; 5] = [0.3, 0.5, 0.7, 0.9, 1.0];
const LAMS: [f64; 3] = [0.1, 0.5, 0.9];

type Outcome = Result<String, String>;

fn grid() -> impl Iterator<Item = ProcessParams> {
    QS.into_iter().flat_map(|q| LAMS.into_iter().map(move |lam| ProcessParams::new(q, lam).unwrap()))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Tracks the worst value of some error measure and where it happened.
struct Worst {
    what: &'static str,
    limit: f64,
    err: f64,
    at: String,
}

impl Worst {
    fn new(what: &'static str, limit: f64) -> Self {
        Self { what, limit, err: 0.0, at: String::new() }
    }

    fn see(&mut self, err: f64, at: impl FnOnce() -> String) {
        if !(err <= self.err) {
            self.err = err;
            self.at = at();
        }
    }

    fn check(&self) -> Outcome {
        if self.err <= self.limit {
            Ok(format!("{} {:.1e} <= {:.0e}", self.what, self.err, self.limit))
        } else {
            Err(format!("{} {:.3e} > {:.0e} at {}", self.what, self.err, self.limit, self.at))
        }
    }
}

fn all(parts: Vec<Outcome>) -> Outcome {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for p in parts {
        match p {
            Ok(s) => ok.push(s),
            Err(s) => bad.push(s),
        }
    }
    if bad.is_empty() {
        Ok(ok.join("; "))
    } else {
        Err(bad.join("; "))
    }
}

fn within(limit_s: f64, took: Duration) -> Outcome {
    if took.as_secs_f64() < limit_s {
        Ok(format!("{:.2}s < {limit_s}s", took.as_secs_f64()))
    } else {
        Err(format!("runtime {:.2}s exceeds {limit_s}s", took.as_secs_f64()))
    }
}

fn h(alpha: f64, x: f64) -> f64 {
    gbc_value(alpha, x).unwrap()
}

fn c1_identities() -> Outcome {
    let mut diff = Worst::new("difference identity", 1e-10);
    let alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.5, 2.7];
    for a in alphas {
        for x in 2..=50 {
            let x = x as f64;
            diff.see(rel(h(a, x) - h(a, x - 1.0), h(a - 1.0, x)), || format!("alpha={a} x={x}"));
        }
    }
    let mut sym = Worst::new("symmetry", 1e-10);
    let pts: [f64; 8] = [0.3, 0.7, 1.5, 2.25, 3.6, 7.1, 12.9, 33.4];
    for a in pts {
        for x in pts {
            if (a + x).fract() == 0.0 {
                continue; // h_{a-1}(x) sits on a pole
            }
            sym.see(rel(h(a - 1.0, x), h(x - 1.0, a)), || format!("alpha={a} x={x}"));
        }
    }
    let mut gen = Worst::new("generating series", 1e-10);
    for lam in [-0.6, -0.45, -0.3, -0.1, 0.1, 0.3, 0.45, 0.6] {
        for x in [0.5, 1.0, 2.3] {
            let s: f64 = (0..=200).map(|m| h(m as f64, x) * f64::powi(lam, m)).sum();
            gen.see(rel(s, (1.0 - lam).powf(-x)), || format!("lam={lam} x={x}"));
        }
    }
    let mut conv = Worst::new("convolution identity", 1e-10);
    for q in [0.25, 0.5, 0.75] {
        for a in [0.3, 1.2] {
            for t in 1..=40 {
                let s: f64 = (1..=t).map(|u| h(-q, (t - u + 1) as f64) * h(a, u as f64)).sum();
                conv.see(rel(s, h(a - q + 1.0, t as f64)), || format!("q={q} alpha={a} t={t}"));
            }
        }
    }
    all(vec![diff.check(), sym.check(), gen.check(), conv.check()])
}

fn c2_ml_difference_formula() -> Outcome {
    let ctl = SeriesControl::with_rel_tol(1e-15);
    let mut w = Worst::new("fractional-difference formula", 1e-10);
    for q in [0.3, 0.5, 0.8] {
        for lam in [-0.6, -0.3, 0.3, 0.6] {
            let f: Vec<f64> = match ml_eval_range(q, lam, 60, &ctl) {
                Ok(v) => v.into_iter().skip(1).map(|r| r.value).collect(),
                Err(e) => return Err(format!("F_{{{q},{lam}}}: {e}")),
            };
            let g = GridFunction::new(1, f.clone()).unwrap();
            for t in 2..=60_i64 {
                let lhs = fractional_difference_rl(&g, q, t).unwrap();
                let rhs = h(-q, t as f64) + lam * f[t as usize - 1];
                w.see(rel(lhs, rhs), || format!("q={q} lam={lam} t={t}"));
            }
        }
    }
    w.check()
}

fn c3_pgf() -> Outcome {
    let mut bracket = Worst::new("series gap beyond tail bound", 0.0);
    let mut geo = Worst::new("q=1 geometric", 1e-13);
    let mut deriv = Worst::new("derivative vs finite difference", 1e-7);
    for p in grid() {
        let d = WaitingTimeDist::new(p, SeriesControl::default()).unwrap();
        for i in 1..=9 {
            let z = i as f64 / 10.0;
            // truncate where the remainder bound is about 1e-8
            let u_max = (1e-8f64.ln() / z.ln()).ceil() as usize;
            let s = d.pgf_series(z, u_max).map_err(|e| e.to_string())?;
            let closed = d.pgf_closed(z).unwrap();
            // the bound is exact arithmetic; leave a few ulps for the two roundings
            let allowance = s.tail_bound + 8.0 * f64::EPSILON * closed;
            bracket.see((s.value - closed).abs() - allowance, || format!("{p:?} z={z} u_max={u_max}"));
        }
        for z in [0.2, 0.5, 0.8] {
            let hh = 1e-5;
            let fd = (d.pgf_closed(z + hh).unwrap() - d.pgf_closed(z - hh).unwrap()) / (2.0 * hh);
            deriv.see(rel(fd, d.pgf_derivative(z).unwrap()), || format!("{p:?} z={z}"));
        }
        if p.q == 1.0 {
            let pg = p.lam / (1.0 + p.lam);
            for i in -10..=10 {
                let z = i as f64 / 10.0;
                let want = pg * z / (1.0 - (1.0 - pg) * z);
                geo.see((d.pgf_closed(z).unwrap() - want).abs(), || format!("pgf {p:?} z={z}"));
            }
            for u in 1..=60 {
                let want = pg * (1.0 - pg).powi(u as i32 - 1);
                geo.see(rel(d.pmf(u).unwrap(), want), || format!("pmf {p:?} u={u}"));
            }
        }
    }
    all(vec![bracket.check(), geo.check(), deriv.check()])
}

fn c4_mean() -> Outcome {
    let mut geo = Worst::new("q=1 mean vs 1+1/lam", 1e-6);
    for lam in [0.1, 0.5, 0.9] {
        let d = WaitingTimeDist::new(ProcessParams::new(1.0, lam).unwrap(), SeriesControl::default()).unwrap();
        geo.see((d.partial_mean(500).unwrap() - (1.0 + 1.0 / lam)).abs(), || format!("lam={lam}"));
    }
    let mut parts = vec![geo.check()];
    let mut min_ratio = f64::INFINITY;
    let mut where_min = String::new();
    for q in [0.3, 0.5, 0.7] {
        for lam in LAMS {
            let d = WaitingTimeDist::new(ProcessParams::new(q, lam).unwrap(), SeriesControl::default()).unwrap();
            let (a, b) = (d.partial_mean(1_000).unwrap(), d.partial_mean(10_000).unwrap());
            if !(b > a) {
                parts.push(Err(format!("partial mean not increasing at q={q} lam={lam}: {a} -> {b}")));
            }
            if b / a < min_ratio {
                min_ratio = b / a;
                where_min = format!("q={q} lam={lam}");
            }
        }
    }
    parts.push(if min_ratio > 1.5 {
        Ok(format!("min partial-mean ratio {min_ratio:.3} > 1.5 ({where_min})"))
    } else {
        Err(format!("partial-mean ratio {min_ratio:.4} <= 1.5 at {where_min}"))
    });
    all(parts)
}

fn binomial_pmf(t: usize, n: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..n {
        c = c * (t - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(n as i32) * (1.0 - p).powi((t - n) as i32)
}

fn c5_counting() -> Outcome {
    let ctl = SeriesControl::default();
    let mut oracle = Worst::new("exact vs oracle", 1e-8);
    let mut zero = Worst::new("n=0 vs survival", 1e-11);
    let mut tail = Worst::new("table tail", 1e-9);
    let mut binom = Worst::new("q=1 vs binomial", 1e-10);
    for p in grid() {
        for t in 1..=30 {
            for n in 0..=t.min(10) {
                let query = CountPmfQuery { params: p, t, n, ctl };
                let e = count_pmf_exact(&query).map_err(|e| format!("{p:?} t={t} n={n}: {e}"))?;
                let o = count_pmf_oracle(&query).map_err(|e| e.to_string())?;
                oracle.see((e - o).abs(), || format!("{p:?} t={t} n={n}"));
                if n == 0 {
                    zero.see((e - ml_survival(&p, t, &ctl).unwrap()).abs(), || format!("{p:?} t={t}"));
                }
            }
            let table = count_table(&p, t, t, &ctl).map_err(|e| format!("{p:?} t={t}: {e}"))?;
            tail.see(table.tail_mass, || format!("{p:?} t={t}"));
            if p.q == 1.0 {
                for (n, &v) in table.probs.iter().enumerate() {
                    binom.see((v - binomial_pmf(t, n, p.p_geom())).abs(), || format!("{p:?} t={t} n={n}"));
                }
            }
        }
    }
    all(vec![oracle.check(), zero.check(), tail.check(), binom.check()])
}

fn c6_generating_function() -> Outcome {
    let ctl = SeriesControl::default();
    let mut failures = Vec::new();
    let mut worst_use = 0.0_f64;
    for p in grid() {
        for n in 0..=2 {
            for (z, t_max) in [(0.3, 20), (0.6, 40)] {
                let g = count_gf_check(&p, n, z, t_max, &ctl).map_err(|e| e.to_string())?;
                // every probability carries up to rel_tol of truncation error
                let slack = 10.0 * ctl.rel_tol / (1.0 - z);
                worst_use = worst_use.max((g.lhs - g.rhs).abs() / (g.tail_allowance + slack));
                if !g.agrees(slack) {
                    failures.push(format!("{p:?} n={n} z={z}: |{} - {}| > {}", g.lhs, g.rhs, g.tail_allowance));
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("90 checks, worst gap uses {:.0}% of the allowance", 100.0 * worst_use))
    } else {
        Err(failures.join("; "))
    }
}

fn c7_bifurcation() -> Outcome {
    let ctl = SeriesControl::default();
    let mut ratio = Worst::new("sub/renewal at u=1 vs q", 1e-12);
    let mut coincide = Worst::new("q=1 PMF gap", 1e-12);
    let mut compose = Worst::new("composition identity", 1e-13);
    for p in grid() {
        let d = WaitingTimeDist::new(p, ctl).unwrap();
        if p.q < 1.0 {
            let r = sub_wt_pmf(&p, 1, &ctl).unwrap() / d.pmf(1).unwrap();
            ratio.see((r - p.q).abs(), || format!("{p:?}"));
        } else {
            let sub = dfpp::sub_wt_pmf_vec(&p, 50, &ctl).unwrap();
            for (i, s) in sub.iter().enumerate() {
                coincide.see((s - d.pmf(i + 1).unwrap()).abs(), || format!("{p:?} u={}", i + 1));
            }
        }
        let g1 = WaitingTimeDist::new(ProcessParams::new(1.0, p.lam).unwrap(), ctl).unwrap();
        let sq = SibuyaDist::new(p.q).unwrap();
        for i in -10..=10 {
            let z = i as f64 / 10.0;
            let want = g1.pgf_closed(sq.pgf(z).unwrap()).unwrap();
            compose.see((sub_wt_pgf(&p, z).unwrap() - want).abs(), || format!("{p:?} z={z}"));
        }
    }
    all(vec![ratio.check(), coincide.check(), compose.check()])
}

fn c8_monte_carlo() -> Outcome {
    let p = ProcessParams::new(0.5, 0.5).unwrap();
    let exact = count_table(&p, 10, 5, &SeriesControl::default()).map_err(|e| e.to_string())?.probs;
    let run = |workers| {
        let cfg = SamplerConfig::new(20_260_101, 1_000_000, 10, workers).unwrap();
        mc_count_estimate(&p, &cfg, 10, 5, Model::Renewal).map_err(|e| e.to_string())
    };
    let one = run(1)?;
    let four = run(4)?;
    if one != four {
        return Err("estimates differ between 1 and 4 workers".into());
    }
    let mut worst = Worst::new("max |z|", 4.0);
    for (e, x) in one.iter().zip(&exact) {
        worst.see(e.z_score(*x).abs(), || format!("n={}", e.n));
    }
    worst.check().map(|s| format!("{s}; workers 1 and 4 identical"))
}

fn c9_closed_forms() -> Outcome {
    let ctl = SeriesControl::default();
    let p = ProcessParams::new(1.0, 0.5).unwrap();
    let d = WaitingTimeDist::new(p, ctl).unwrap();
    let mut parts = Vec::new();
    let g = d.pgf_closed(0.4).unwrap();
    let want = (1.0 / 3.0) * 0.4 / (1.0 - (2.0 / 3.0) * 0.4);
    parts.push(if rel(g, want) < 1e-14 { Ok("geometric PGF".to_string()) } else { Err(format!("geometric PGF {g} vs {want}")) });
    let m = d.partial_mean(500).unwrap();
    parts.push(if (m - 3.0).abs() < 1e-6 { Ok("mean 1+1/lam".to_string()) } else { Err(format!("mean {m} vs 3")) });
    let q = ProcessParams::new(0.5, 0.5).unwrap();
    let c = count_pmf_exact(&CountPmfQuery { params: q, t: 12, n: 0, ctl }).unwrap();
    let f = ml_survival(&q, 12, &ctl).unwrap();
    parts.push(if (c - f).abs() < 1e-11 { Ok("n=0 identity".to_string()) } else { Err(format!("n=0 {c} vs {f}")) });
    all(parts)
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Outcome); 9] = [
        (1, "fractional calculus identities", 5.0, c1_identities),
        (2, "Mittag-Leffler fractional difference", 5.0, c2_ml_difference_formula),
        (3, "waiting-time PGF", 10.0, c3_pgf),
        (4, "mean behaviour", f64::INFINITY, c4_mean),
        (5, "count distribution", 60.0, c5_counting),
        (6, "count generating function", 30.0, c6_generating_function),
        (7, "model bifurcation", f64::INFINITY, c7_bifurcation),
        (8, "Monte Carlo", 120.0, c8_monte_carlo),
        (9, "closed-form values", f64::INFINITY, c9_closed_forms),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match (outcome, within(limit, took)) {
            (Ok(s), Ok(_)) => Ok(s),
            (Ok(_), Err(t)) => Err(t),
            (Err(s), _) => Err(s),
        };
        match outcome {
            Ok(detail) => println!("criterion {id} PASS [{:.2}s] {name}: {detail}", took.as_secs_f64()),
            Err(reason) => {
                failed += 1;
                println!("criterion {id} FAIL [{:.2}s] {name}: {reason}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
