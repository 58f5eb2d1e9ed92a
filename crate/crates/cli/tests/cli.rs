use std::path::Path;
use std::process::{Command, Output};

fn dfpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfpp"))
        .args(args)
        .env_remove("DFPP_REL_TOL")
        .output()
        .expect("spawn dfpp")
}

fn ok(args: &[&str]) -> String {
    let out = dfpp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let head = r.headers().unwrap().iter().map(str::to_owned).collect();
    let body = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (head, body)
}

fn column(csv_text: &str, name: &str) -> Vec<f64> {
    let (head, body) = rows(csv_text);
    let j = head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    body.iter().map(|r| r[j].parse().unwrap()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn geometric_waiting_time_at_q_one() {
    let out = ok(&["wt-pmf", "--q", "1", "--lam", "0.5", "--u-max", "5"]);
    let pmf = column(&out, "pmf");
    assert_eq!(pmf.len(), 5);
    for (i, p) in pmf.iter().enumerate() {
        let want = (1.0 / 3.0) * (2.0f64 / 3.0).powi(i as i32);
        assert!(rel(*p, want) < 1e-13, "u={} {p} vs {want}", i + 1);
    }
}

#[test]
fn no_event_probability_matches_survival() {
    let c = column(&ok(&["count-pmf", "--q", "0.5", "--lam", "0.5", "--t", "12", "--n", "0"]), "prob")[0];
    let f = column(&ok(&["ml", "--q", "0.5", "--lam", "-0.5", "--t", "12"]), "value")[0];
    assert!((c - f).abs() < 1e-11, "{c} vs {f}");
}

#[test]
fn models_coincide_at_q_one() {
    let out = ok(&["compare-models", "--q", "1", "--lam", "0.3", "--u-max", "10"]);
    let diff = column(&out, "diff");
    assert_eq!(diff.len(), 10);
    assert!(diff.iter().all(|d| *d <= 1e-12), "{diff:?}");
}

fn reserialize(csv_text: &str) -> String {
    let (head, body) = rows(csv_text);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&head).unwrap();
    for r in body {
        let fields: Vec<String> = r
            .iter()
            .map(|f| match (f.parse::<i64>(), f.parse::<f64>()) {
                (Ok(i), _) => i.to_string(),
                (Err(_), Ok(x)) => format!("{x:.16e}"),
                _ => f.clone(),
            })
            .collect();
        w.write_record(&fields).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

const SAMPLE_RUNS: &[&[&str]] = &[
    &["hfun", "--alpha", "-0.5", "--x", "1,2.5,7"],
    &["ml", "--q", "0.7", "--lam", "-0.9", "--t", "0,1,5,40"],
    &["wt-pmf", "--q", "0.5", "--lam", "0.5", "--u-max", "20"],
    &["wt-pgf", "--q", "0.6", "--lam", "0.3", "--z", "-1,-0.5,0.5,1"],
    &["wt-pgf", "--q", "0.6", "--lam", "0.3", "--z", "0,0.5,0.9", "--u-max", "50"],
    &["wt-mean", "--q", "0.5", "--lam", "0.5", "--t-max", "1,10,100"],
    &["count-table", "--q", "0.5", "--lam", "0.9", "--t", "15"],
    &["count-gf-check", "--q", "0.7", "--lam", "0.4", "--n", "2", "--z", "0.6", "--t-max", "80"],
    &["sibuya", "--q", "0.3", "--k-max", "12"],
    &["compare-models", "--q", "0.5", "--lam", "0.5", "--u-max", "8"],
    &["simulate", "--q", "0.5", "--lam", "0.5", "--horizon", "15", "--paths", "20", "--seed", "3"],
    &["mc-compare", "--q", "0.5", "--lam", "0.5", "--horizon", "10", "--paths", "2000"],
];

#[test]
fn csv_output_round_trips_byte_for_byte() {
    for args in SAMPLE_RUNS {
        let out = ok(args);
        assert!(out.starts_with(|c: char| c.is_ascii_alphabetic()), "header missing for {args:?}");
        assert_eq!(reserialize(&out), out, "{args:?}");
    }
}

#[test]
fn json_and_csv_carry_the_same_values() {
    for args in SAMPLE_RUNS {
        let csv_out = ok(args);
        let mut json_args = args.to_vec();
        json_args.extend(["--format", "json"]);
        let json: serde_json::Value = serde_json::from_str(&ok(&json_args)).unwrap();
        let objs = json.as_array().unwrap();
        let (head, body) = rows(&csv_out);
        assert_eq!(objs.len(), body.len(), "{args:?}");
        for (obj, row) in objs.iter().zip(&body) {
            let obj = obj.as_object().unwrap();
            let mut sorted = head.clone();
            sorted.sort();
            assert_eq!(obj.keys().cloned().collect::<Vec<_>>(), sorted);
            for (name, field) in head.iter().zip(row) {
                let v = &obj[name];
                match v {
                    serde_json::Value::Number(n) => {
                        let from_csv: f64 = field.parse().unwrap();
                        assert_eq!(n.as_f64().unwrap().to_bits(), from_csv.to_bits(), "{args:?} {name}");
                    }
                    serde_json::Value::Bool(b) => assert_eq!(b.to_string(), *field),
                    serde_json::Value::String(s) => assert_eq!(s, field),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }
}

#[test]
fn infinite_derivative_survives_both_formats() {
    let args = ["wt-pgf", "--q", "0.5", "--lam", "0.5", "--z", "1"];
    assert!(column(&ok(&args), "derivative")[0].is_infinite());
    let json = ok(&[&args[..], &["--format", "json"]].concat());
    assert!(json.contains("\"derivative\": \"inf\""), "{json}");
}

fn diagnostic(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad diagnostic {text}: {e}"))
}

#[test]
fn invalid_input_exits_two() {
    let cases: &[&[&str]] = &[
        &["ml", "--q", "2", "--lam", "0.5", "--t", "3"],
        &["wt-pmf", "--q", "0.5", "--lam", "1.5", "--u-max", "3"],
        &["wt-pmf", "--q", "0.5", "--lam", "0.5"],
        &["count-pmf", "--q", "0.5", "--lam", "0.5", "--t", "3", "--n", "x"],
        &["ml", "--q", "0.5", "--lam", "0.5", "--t", "3", "--tol", "-1"],
        &["ml", "--q", "0.5", "--lam", "0.5", "--t", "3", "--max-limbs", "5"],
        &["simulate", "--q", "0.5", "--lam", "0.5", "--horizon", "5", "--workers", "0"],
        &["mc-compare", "--q", "0.5", "--lam", "0.5", "--horizon", "5", "--model", "subordinated"],
        &["no-such-command"],
    ];
    for args in cases {
        let out = dfpp(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?} wrote to stdout");
    }
    let out = dfpp(cases[0]);
    let d = diagnostic(&out);
    assert_eq!(d["error"]["kind"], "invalid_params");
    assert!(d["message"].as_str().unwrap().contains("q"));
}

#[test]
fn numerical_failure_exits_three_with_nothing_on_stdout() {
    let out = dfpp(&["ml", "--q", "0.5", "--lam", "-0.9", "--t", "5,30", "--max-limbs", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty(), "partial table written");
    assert_eq!(diagnostic(&out)["error"]["kind"], "cancellation");

    let out = dfpp(&["count-pmf", "--q", "0.5", "--lam", "0.9", "--t", "30", "--n", "1", "--max-terms", "5"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(diagnostic(&out)["error"]["kind"], "convergence");
}

#[test]
fn tolerance_comes_from_the_environment() {
    let help = ok(&["--help"]);
    assert!(help.contains("DFPP_REL_TOL"));
    let out = Command::new(env!("CARGO_BIN_EXE_dfpp"))
        .args(["ml", "--q", "0.5", "--lam", "0.5", "--t", "3"])
        .env("DFPP_REL_TOL", "-3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let loose = Command::new(env!("CARGO_BIN_EXE_dfpp"))
        .args(["ml", "--q", "0.5", "--lam", "0.5", "--t", "30"])
        .env("DFPP_REL_TOL", "1e-4")
        .output()
        .unwrap();
    let tight = ok(&["ml", "--q", "0.5", "--lam", "0.5", "--t", "30"]);
    let loose_terms = column(&String::from_utf8(loose.stdout).unwrap(), "terms_used")[0];
    assert!(loose_terms < column(&tight, "terms_used")[0]);
}

#[test]
fn simulation_ignores_worker_count() {
    let base = ["simulate", "--q", "0.4", "--lam", "0.7", "--horizon", "50", "--paths", "300", "--seed", "11"];
    let one = ok(&[&base[..], &["--workers", "1"]].concat());
    let four = ok(&[&base[..], &["--workers", "4"]].concat());
    let sub = ok(&[&base[..], &["--workers", "3", "--model", "subordinated"]].concat());
    assert_eq!(one, four);
    assert_ne!(one, sub);
    let (_, body) = rows(&one);
    assert_eq!(body.len(), 300);
    for r in &body {
        let times: Vec<u64> = if r[2].is_empty() { vec![] } else { r[2].split(';').map(|s| s.parse().unwrap()).collect() };
        assert_eq!(times.len().to_string(), r[1]);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&s| (1..=50).contains(&s)));
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn out_and_pgf_out_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("pmf.csv");
    let pgf = dir.path().join("pgf.csv");
    let args = ["compare-models", "--q", "0.5", "--lam", "0.5", "--u-max", "4"];
    let stdout = ok(&[
        &args[..],
        &["--out", main.to_str().unwrap(), "--pgf-out", pgf.to_str().unwrap()],
    ]
    .concat());
    assert!(stdout.is_empty());
    assert_eq!(read(&main), ok(&args));
    let diff = column(&read(&main), "diff");
    assert!((diff[0] - 1.0 / 6.0).abs() < 1e-14);

    let g = read(&pgf);
    let z = column(&g, "z");
    assert_eq!(z.len(), 21);
    let k = z.iter().position(|v| (v - 0.5).abs() < 1e-12).unwrap();
    let renewal = column(&g, "renewal")[k];
    let sub = column(&g, "subordinated")[k];
    let s = 0.5f64.sqrt();
    assert!((renewal - 0.25 / (s + 0.5)).abs() < 1e-14);
    assert!((sub - 0.5 * (1.0 - s) / (s + 0.5)).abs() < 1e-14);

    let bad = dir.path().join("missing").join("x.csv");
    let out = dfpp(&[&args[..], &["--out", bad.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mc_compare_reports_z_scores() {
    let out = ok(&["mc-compare", "--q", "0.5", "--lam", "0.5", "--horizon", "10", "--paths", "40000", "--workers", "2"]);
    let z = column(&out, "z_score");
    assert_eq!(z.len(), 6);
    assert!(z.iter().all(|v| v.abs() < 5.0), "{z:?}");
    let exact = column(&out, "exact");
    let direct = column(&ok(&["count-table", "--q", "0.5", "--lam", "0.5", "--t", "10", "--n-max", "5"]), "prob");
    assert_eq!(exact, direct);

    let wt = ok(&[
        "mc-compare", "--q", "0.5", "--lam", "0.5", "--horizon", "20", "--paths", "40000", "--quantity", "waiting-time",
        "--model", "subordinated",
    ]);
    assert_eq!(column(&wt, "u").len(), 20);
    assert!(column(&wt, "z_score").iter().all(|v| v.abs() < 5.0));
}
