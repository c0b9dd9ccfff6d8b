use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mpspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpspec")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn mp_table_shape_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("mp.csv");
    let o = mpspec(&["mp", "--c", "0.5", "--points", "3", "--from", "0.1", "--to", "2.9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x,density,cdf"));
    assert_eq!(csv_rows(&text).len(), 3);
    let side = json(&dir.path().join("mp.json"));
    assert!((side["point_mass"].as_f64().unwrap()).abs() < 1e-15);
    assert!((side["b"].as_f64().unwrap() - (1.0 + 0.5f64.sqrt()).powi(2)).abs() < 1e-12);
}

#[test]
fn mp_columns_are_monotone_and_reach_one() {
    let o = mpspec(&["mp", "--c", "2", "--points", "50", "--from", "0.01", "--to", "6"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert!(rows.iter().all(|r| r[1] >= 0.0));
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
    assert!((rows.last().unwrap()[2] - 1.0).abs() < 1e-8);
    // below the lower edge only the atom at zero remains
    assert!((rows[0][2] - 0.5).abs() < 1e-12);
}

#[test]
fn invalid_flags_exit_two() {
    assert_eq!(code(&mpspec(&["mp", "--c", "-1"])), 2);
    assert_eq!(code(&mpspec(&["mp"])), 2);
    assert_eq!(code(&mpspec(&["mp", "--c", "0.5", "--points", "0"])), 2);
    assert_eq!(code(&mpspec(&["frobnicate"])), 2);
}

#[test]
fn estimate_matches_gaussian_mixture() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("eig.csv");
    std::fs::write(&input, "eigenvalue\n0.5\n1.0\n2.0\n").unwrap();
    let out = dir.path().join("est.csv");
    let o = mpspec(&[
        "estimate", "--in", input.to_str().unwrap(), "--n", "6", "--h", "1", "--points", "5", "--from", "0", "--to", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("x,f_n,F_n"));
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    for row in csv_rows(&text) {
        let expected = [0.5, 1.0, 2.0].iter().map(|&l| phi(row[0] - l)).sum::<f64>() / 3.0;
        assert!((row[1] - expected).abs() < 1e-14, "x={}", row[0]);
    }
    let side = json(&dir.path().join("est.json"));
    assert_eq!(side["p"], 3);
    assert_eq!(side["h"], 1.0);
    assert!((side["c_n"].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn estimate_defaults_bandwidth_from_regime() {
    let dir = TempDir::new().unwrap();
    let side = dir.path().join("side.json");
    let o = mpspec(&[
        "estimate", "--simulate", "p=20", "n=40", "seed=3", "--regime", "cdf", "--points", "4", "--sidecar",
        side.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let h = json(&side)["h"].as_f64().unwrap();
    let expected = 40f64.powf(-0.5) * 40f64.ln().powf(-0.25);
    assert!((h - expected).abs() < 1e-15);
    assert_eq!(json(&side)["bandwidth_from_rule"], true);
}

#[test]
fn simulated_estimate_is_reproducible() {
    let run = || mpspec(&["estimate", "--simulate", "p=60", "n=120", "seed=7", "--points", "25"]).stdout;
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn malformed_eigenvalue_csv_exits_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "eigenvalue\n1.0\nnot-a-number\n").unwrap();
    assert_eq!(code(&mpspec(&["estimate", "--in", bad.to_str().unwrap(), "--n", "4"])), 2);
    std::fs::write(&bad, "1.0\n2.0\n").unwrap();
    assert_eq!(code(&mpspec(&["estimate", "--in", bad.to_str().unwrap(), "--n", "4"])), 2);
    assert_eq!(code(&mpspec(&["estimate", "--in", bad.to_str().unwrap()])), 2);
}

#[test]
fn export_round_trips_through_import() {
    let dir = TempDir::new().unwrap();
    let eig = dir.path().join("eig.csv");
    let a = mpspec(&["estimate", "--simulate", "p=30", "n=60", "seed=1", "--export", eig.to_str().unwrap(), "--h", "0.2"]);
    let b = mpspec(&["estimate", "--in", eig.to_str().unwrap(), "--n", "60", "--h", "0.2"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn quantile_table() {
    let o = mpspec(&["quantile", "--simulate", "p=100", "n=200", "seed=2", "--alpha", "0.25,0.5,0.75"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("alpha,x_n,x_mp"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| (r[1] - r[2]).abs() < 0.1));
    assert_eq!(code(&mpspec(&["quantile", "--simulate", "p=10", "n=20", "--alpha", "1.5"])), 2);
}

#[test]
fn sigma2_output() {
    let o = mpspec(&["sigma2", "--kernel", "gaussian"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let s2 = v["sigma2"].as_f64().unwrap();
    assert!(s2 > 0.0);
    assert!(v["error_estimate"].as_f64().unwrap() < 1e-6 * s2);
    assert_eq!(o.stdout, mpspec(&["sigma2"]).stdout);
    assert_eq!(code(&mpspec(&["sigma2", "--kernel", "epanechnikov"])), 2);
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn verify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"p": 40, "n": 80, "replications": 40, "statistic": "density", "points": [1.0], "master_seed": 5}"#,
    );
    let out = dir.path().join("report.json");
    let o = mpspec(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let report = json(&out);
    for key in ["config", "statistics", "mean", "covariance", "ks", "pass", "seconds"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["statistics"].as_array().unwrap().len(), 40);
    let expected = if report["pass"].as_bool().unwrap() { 0 } else { 1 };
    assert_eq!(code(&o), expected);

    assert_eq!(code(&mpspec(&["verify", "--config", &cfg, "--reps", "1"])), 2);

    let unknown = write_config(
        &dir,
        r#"{"p": 40, "n": 80, "replications": 4, "statistic": "cdf", "points": [1.0], "master_seed": 5, "colour": 1}"#,
    );
    let o = mpspec(&["verify", "--config", &unknown]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert_eq!(code(&mpspec(&["verify", "--config", "/nonexistent/cfg.json"])), 2);
}

#[test]
fn verify_fails_on_misspecified_limit() {
    // no sample reaches a KS p-value this close to 1
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"p": 30, "n": 60, "replications": 10, "statistic": "cdf", "points": [1.0], "master_seed": 1,
            "entry_dist": "three-point", "ks_threshold": 0.999999999}"#,
    );
    assert_eq!(code(&mpspec(&["verify", "--config", &cfg])), 1);
}

#[test]
fn verify_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"p": 30, "n": 60, "replications": 8, "statistic": "quantile", "alpha_list": [0.5], "master_seed": 9}"#,
    );
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_mpspec"))
            .args(["verify", "--config", &cfg])
            .env("MPSPEC_THREADS", threads)
            .output()
            .unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["seconds"] = serde_json::Value::from(0.0);
        v.to_string()
    };
    assert_eq!(run("1"), run("3"));
    let bad = Command::new(env!("CARGO_BIN_EXE_mpspec")).args(["sigma2"]).env("MPSPEC_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn contour_passes_at_defaults_and_rejects_short_rectangle() {
    let o = mpspec(&["contour", "--simulate", "p=60", "n=120", "seed=4", "--at", "1.0,1.5", "--per-side", "1000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["max_relative_residual"].as_f64().unwrap() <= 1e-3);
    let o = mpspec(&["contour", "--simulate", "p=60", "n=120", "seed=4", "--a-r", "2.0"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn bias_report() {
    let o = mpspec(&["bias", "--n", "40", "--reps", "20", "--points", "3", "--v", "0.5", "--seed", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), 2);
    let expected = if v["pass"].as_bool().unwrap() { 0 } else { 1 };
    assert_eq!(code(&o), expected);
    assert_eq!(code(&mpspec(&["bias", "--n", "400", "--v", "0.01"])), 2);
}
