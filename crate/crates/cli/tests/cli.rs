use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;
use weibull_mle::formats::Table;

fn wmle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn wmle_ok(args: &[&str]) -> Output {
    let out = wmle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn table(path: &Path) -> Table {
    Table::read(fs::File::open(path).unwrap()).unwrap()
}

fn out_arg(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_owned()
}

#[test]
fn mle_on_two_points() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("x.txt");
    fs::write(&input, format!("1\n{}\n", std::f64::consts::E)).unwrap();
    let out = wmle_ok(&["mle", input.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!((field("delta_hat") - 2.399_357_280_515).abs() <= 1e-9);
    assert!((field("beta_hat") - 2.111_344_648_57).abs() <= 1e-9);
}

#[test]
fn mle_error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let flat = dir.path().join("flat.txt");
    fs::write(&flat, "5\n5\n5\n").unwrap();
    let out = wmle(&["mle", flat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));

    let garbled = dir.path().join("garbled.txt");
    fs::write(&garbled, "1\nabc\n3\n").unwrap();
    let out = wmle(&["mle", garbled.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let negative = dir.path().join("neg.txt");
    fs::write(&negative, "1\n-2\n").unwrap();
    assert_eq!(wmle(&["mle", negative.to_str().unwrap()]).status.code(), Some(3));

    let missing = dir.path().join("missing.txt");
    assert_eq!(wmle(&["mle", missing.to_str().unwrap()]).status.code(), Some(5));

    let tol = wmle(&["mle", flat.to_str().unwrap(), "--tol", "-1"]);
    assert_eq!(tol.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_config_code() {
    assert_eq!(wmle(&["simulate", "--m", "99"]).status.code(), Some(2));
    assert_eq!(wmle(&["simulate", "--n-list", "1,10"]).status.code(), Some(2));
    assert_eq!(wmle(&["quantiles", "--p-list", "0.5,1.5"]).status.code(), Some(2));
    assert_eq!(wmle(&["simulate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_worker_independent() {
    let runs: Vec<TempDir> = (0..3).map(|_| TempDir::new().unwrap()).collect();
    wmle_ok(&["simulate", "--seed", "42", "--out", &out_arg(&runs[0])]);
    wmle_ok(&["simulate", "--seed", "42", "--workers", "1", "--out", &out_arg(&runs[1])]);
    wmle_ok(&["simulate", "--seed", "42", "--workers", "8", "--out", &out_arg(&runs[2])]);
    for file in ["params.csv", "summary.csv"] {
        let reference = fs::read(runs[0].path().join(file)).unwrap();
        for other in &runs[1..] {
            assert_eq!(reference, fs::read(other.path().join(file)).unwrap(), "{file}");
        }
    }
    assert_eq!(table(&runs[0].path().join("params.csv")).rows.len(), 12);
}

#[test]
fn smoke_run_has_no_failures_and_round_trips() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["simulate", "--m", "100", "--samples", "--out", &out_arg(&dir)]);
    let summary = table(&dir.path().join("summary.csv"));
    assert!(summary.reals("failures").unwrap().iter().all(|f| *f == 0.0));
    let samples = table(&dir.path().join("samples.csv"));
    assert_eq!(samples.header, ["n", "delta", "m", "delta_hat", "beta_ratio"]);
    assert_eq!(samples.rows.len(), 12 * 100);

    // the summary means recompute exactly from the written draws
    let dh = samples.reals("delta_hat").unwrap();
    let mean = dh[..100].iter().sum::<f64>() / 100.0;
    assert_eq!(mean, summary.reals("mean_dh").unwrap()[0]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n-list = 20\ndelta-list = 2\nm = 200\nseed = 9\n").unwrap();
    wmle_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--m", "300", "--out", &out_arg(&dir)]);
    let summary = table(&dir.path().join("summary.csv"));
    assert_eq!(summary.rows.len(), 1);
    assert_eq!(summary.rows[0][0], "20");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "speed = 3\n").unwrap();
    assert_eq!(wmle(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn regress_on_bundled_surfaces() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["regress", "--out", &out_arg(&dir)]);
    let coef = table(&dir.path().join("coefficients.csv"));
    let published = [
        ("A", [-26.485f64, 7.915, 33.125].as_slice()),
        ("B", &[1.775, 0.463]),
        ("C", &[1.944, -5.782]),
        ("D", &[0.999, -0.031, 0.048, 1.003]),
    ];
    for (model, want) in published {
        let got: Vec<f64> = coef
            .rows
            .iter()
            .filter(|r| r[0] == model)
            .map(|r| r[2].parse().unwrap())
            .collect();
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            let tol = if model == "D" { (0.02 * w.abs()).max(0.005) } else { 0.02 * w.abs() };
            assert!((g - w).abs() <= tol, "{model}: {g} vs {w}");
        }
    }
    let stats = table(&dir.path().join("fit_stats.csv"));
    let d = stats.rows.iter().find(|r| r[0] == "D").unwrap();
    assert!(d[3].parse::<f64>().unwrap() < 0.001);
}

#[test]
fn regress_reads_user_surfaces() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("a.csv");
    let mut text = String::from("n,delta,value\n");
    for n in [10, 20, 30, 40, 50] {
        for delta in [1.0, 2.0] {
            let a = -20.0 + 7.0 * (n as f64 + 30.0).ln();
            text.push_str(&format!("{n},{delta},{a}\n"));
        }
    }
    fs::write(&path, text).unwrap();
    wmle_ok(&["regress", "--a", path.to_str().unwrap(), "--out", &out_arg(&dir)]);
    let coef = table(&dir.path().join("coefficients.csv"));
    let a2: f64 = coef.rows.iter().find(|r| r[0] == "A" && r[1] == "2").unwrap()[2].parse().unwrap();
    assert!((a2 - 30.0).abs() <= 1e-6, "{a2}");
    let stats = table(&dir.path().join("fit_stats.csv"));
    let a = stats.rows.iter().find(|r| r[0] == "A").unwrap();
    assert!(a[1].parse::<f64>().unwrap() > 1.0 - 1e-12);

    fs::write(&path, "n,delta,value\n10,1,x\n").unwrap();
    let out = wmle(&["regress", "--a", path.to_str().unwrap(), "--out", &out_arg(&dir)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn asym_matches_simulated_bias() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["simulate", "--m", "2000", "--out", &out_arg(&dir)]);
    wmle_ok(&["asym", "--m", "2000", "--out", &out_arg(&dir)]);
    let t = table(&dir.path().join("asym.csv"));
    assert_eq!(t.header, ["n", "delta", "diff_b1", "diff_v1", "diff_b2", "diff_v2"]);
    let summary = table(&dir.path().join("summary.csv"));
    let (ns, deltas) = (summary.reals("n").unwrap(), summary.reals("delta").unwrap());
    let means = summary.reals("mean_dh").unwrap();
    let diff_b1 = t.reals("diff_b1").unwrap();
    for i in 0..ns.len() {
        // moment matching makes B̂₁/n the simulated bias of δ̂
        let b1_over_n = weibull_mle::asymptotics::b1(deltas[i]) / ns[i];
        let want = (means[i] - deltas[i] - b1_over_n).abs();
        assert!((diff_b1[i] - want).abs() <= 1e-12, "row {i}");
    }
}

#[test]
fn asym_on_published_grid() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["asym", "--source", "published", "--out", &out_arg(&dir)]);
    let t = table(&dir.path().join("asym.csv"));
    assert_eq!(t.rows.len(), 120);
    let row = t
        .rows
        .iter()
        .find(|r| r[0] == "100" && r[1].parse::<f64>().unwrap() == 1.0)
        .unwrap();
    let diff_b1: f64 = row[2].parse().unwrap();
    assert!((diff_b1 - 0.005).abs() <= 0.002, "{diff_b1}");

    wmle_ok(&["asym", "--source", "published", "--hats", "regression", "--out", &out_arg(&dir)]);
    assert_eq!(table(&dir.path().join("asym.csv")).rows.len(), 120);
}

#[test]
fn quantiles_are_positive_and_complete() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["quantiles", "--m", "1000", "--out", &out_arg(&dir)]);
    let t = table(&dir.path().join("quantiles.csv"));
    assert_eq!(t.header, ["target", "n", "delta", "p", "q_hat", "q_tilde", "q_double_hat"]);
    assert_eq!(t.rows.len(), 12 * 2 * 5);
    for col in ["q_hat", "q_tilde", "q_double_hat"] {
        assert!(t.reals(col).unwrap().iter().all(|q| *q > 0.0), "{col}");
    }
}

#[test]
fn skewness_curve_changes_sign_near_3_6() {
    let dir = TempDir::new().unwrap();
    wmle_ok(&["curves", "--out", &out_arg(&dir)]);
    let t = table(&dir.path().join("skewness_curve.csv"));
    let delta = t.reals("delta").unwrap();
    let skew = t.reals("skewness").unwrap();
    let crossing = (1..delta.len()).find(|&i| skew[i - 1] > 0.0 && skew[i] <= 0.0).unwrap();
    assert_eq!((delta[crossing - 1], delta[crossing]), (3.60, 3.61));
    assert!(!t.rows.is_empty() && table(&dir.path().join("pdf_curves.csv")).rows.len() == 1800);
}

#[test]
fn report_twice_gives_identical_manifest() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let first = wmle_ok(&["report", "--m", "500", "--seed", "5", "--out", &out_arg(&a)]);
    let second = wmle_ok(&["report", "--m", "500", "--seed", "5", "--workers", "2", "--out", &out_arg(&b)]);
    let ma = fs::read(a.path().join("manifest.csv")).unwrap();
    assert_eq!(ma, fs::read(b.path().join("manifest.csv")).unwrap());
    let hash_line = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("config hash"))
            .unwrap()
            .to_owned()
    };
    assert_eq!(hash_line(&first), hash_line(&second));

    let manifest = table(&a.path().join("manifest.csv"));
    assert_eq!(manifest.rows.len(), 10);
    for row in manifest.rows.iter().filter(|r| r[0] != "config.txt") {
        let t = table(&a.path().join(&row[0]));
        assert_eq!(t.rows.len().to_string(), row[1], "{}", row[0]);
    }
}
