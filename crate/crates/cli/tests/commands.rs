use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_smallball"));
    c.env_remove("SMALLBALL_WORKERS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

struct Files {
    _dir: tempfile::TempDir,
    bog: String,
    one: String,
    exp: String,
}

fn files() -> Files {
    let dir = tempfile::tempdir().unwrap();
    let bog = write(dir.path(), "bogoliubov.json", r#"{"kind": "bogoliubov", "omega": 1.0}"#);
    let one = write(dir.path(), "const1.json", r#"{"kind": "constant", "value": 1, "period": "2pi"}"#);
    let exp = write(dir.path(), "exp.json", r#"{"kind": "exponential", "a": 0.15915494309189535}"#);
    Files {
        bog: bog.display().to_string(),
        one: one.display().to_string(),
        exp: exp.display().to_string(),
        _dir: dir,
    }
}

#[test]
fn bogoliubov_unit_interval_constant() {
    let f = files();
    let v = json(&run(&["constant", "--theorem", "periodic-real", "--model", &f.bog, "--weight", &f.one, "--rescale", "2pi"]));
    assert!((v["coefficient"].as_f64().unwrap() - 0.125).abs() < 1e-12);
    assert_eq!(v["exponent"].as_f64(), Some(2.0));
    assert_eq!(v["provenance"], "periodic_real");
    assert_eq!(v["workers"], 1);
}

#[test]
fn sequence_constant() {
    let v = json(&run(&["constant", "--theorem", "sequence", "--p", "1", "--a", "delta0", "--d-sym", "1"]));
    let k = v["coefficient"].as_f64().unwrap();
    assert!((k - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"kind\": \"bogoliubov\",\n  \"omega\": 1,,\n}");
    let f = files();
    let out = run(&["constant", "--theorem", "periodic-real", "--model", bad.to_str().unwrap(), "--weight", &f.one]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn theorem_model_mismatch_is_an_input_error() {
    let f = files();
    let out = run(&["constant", "--theorem", "continuous-real", "--model", &f.bog, "--weight", &f.one]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["constant", "--theorem", "periodic-real", "--model", &f.bog]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_weight_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "tail.json", r#"{"kind": "tail_only", "tail": {"r": 3, "m": 1}}"#);
    let weight = write(dir.path(), "cauchy.json", r#"{"kind": "power_decay", "power": 1}"#);
    let out = run(&[
        "constant",
        "--theorem",
        "continuous-real",
        "--model",
        model.to_str().unwrap(),
        "--weight",
        weight.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flat_weight_eigenvalues_are_the_masses() {
    let f = files();
    let out = run(&["eigs", "--model", &f.bog, "--weight", &f.one, "--k", "64", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let got: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let mut want: Vec<f64> = (-64i64..=64).map(|k| 1.0 / (1.0 + (std::f64::consts::TAU * k as f64).powi(2))).collect();
    want.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-13 * want[0], "{g} vs {w}");
    }
}

#[test]
fn weighted_bogoliubov_fit_residual() {
    let f = files();
    let v = json(&run(&["eigs", "--model", &f.bog, "--weight", &f.exp, "--k", "2048"]));
    assert!(v["fit"]["residual"].as_f64().unwrap() < 0.05, "{v}");
    assert!(v["predicted_law"]["relative_deviation"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn window_beyond_trusted_range_is_refused() {
    let f = files();
    let out = run(&["eigs", "--model", &f.bog, "--weight", &f.one, "--k", "64", "--window", "10,100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window"));
}

#[test]
fn smallball_ratio_column_and_mc_gating() {
    let out = run(&["smallball", "--power", "2", "--terms", "1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ratios: Vec<f64> = text.lines().skip(2).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]));
    assert!((ratios[3] - 1.0).abs() < 0.01);

    let out = run(&["smallball", "--power", "2", "--terms", "200", "--eps", "1,0.5,0.01", "--mc-samples", "5000", "--seed", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        let chernoff: f64 = cells[2].parse().unwrap();
        assert_eq!(cells[5].is_empty(), chernoff < -20.0, "{line}");
    }
}

#[test]
fn outputs_are_reproducible() {
    let f = files();
    let cases: Vec<Vec<&str>> = vec![
        vec!["mc", "--lambda", "1,0.5", "--eps", "0.6", "--samples", "5000", "--seed", "9", "--tilt", "chernoff"],
        vec!["sample", "--model", &f.bog, "--k", "16", "--grid", "64", "--seed", "5", "--proper"],
        vec!["sample", "--model", &f.bog, "--weight", &f.exp, "--k", "16", "--grid", "64", "--paths", "30", "--seed", "5"],
        vec!["eigs", "--model", &f.bog, "--weight", &f.exp, "--k", "32", "--format", "csv"],
    ];
    for args in &cases {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn workers_come_from_the_environment() {
    let args = ["mc", "--lambda", "1", "--eps", "0.5", "--samples", "9000", "--seed", "1"];
    let one = json(&run(&args));
    let three = json(&bin().args(args).env("SMALLBALL_WORKERS", "3").output().unwrap());
    assert_eq!(one["workers"], 1);
    assert_eq!(three["workers"], 3);
    assert_eq!(one["probability"], three["probability"]);
    let flag = json(&bin().args(args).args(["--workers", "2"]).env("SMALLBALL_WORKERS", "3").output().unwrap());
    assert_eq!(flag["workers"], 2);
}

#[test]
fn sample_path_layout() {
    let f = files();
    let out = run(&["sample", "--model", &f.bog, "--k", "8", "--grid", "16", "--seed", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# seed=2"));
    assert_eq!(lines.next(), Some("t,re,im"));
    assert_eq!(lines.count(), 16);
}

#[test]
fn verify_subset() {
    let out = run(&["verify", "--only", "golden-constants"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("PASS golden-constants"));
    assert!(text.contains("1 of 1 criteria passed"));
    assert_eq!(run(&["verify", "--only", "nonsense"]).status.code(), Some(2));
}
