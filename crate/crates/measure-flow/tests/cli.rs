use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_measure-flow"));
    cmd.env_remove("MEASURE_FLOW_THREADS");
    cmd
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn measure-flow")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn table(path: &Path) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(|f| f.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn counterexample_separates_flat_and_z() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["run", "--config", s(&config("example_1_1.toml")), "--out", s(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = summary(tmp.path());
    assert!(num(&v, "flat_gap") >= 1.8);
    assert!(num(&v, "z_cauchy_order") >= 0.5 * 0.9);
    assert!(num(&v, "flat_cauchy_order").abs() < 0.1);
    assert_eq!(v["experiment"], "counterexample");
    let rows = table(&tmp.path().join("cauchy.csv"));
    // all pairs of six rungs
    assert_eq!(rows.len(), 15);
}

#[test]
fn linear_advection_is_exact() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["run", "--config", s(&config("linear_advection.toml")), "--out", s(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = summary(tmp.path());
    assert!(num(&v, "position_error") <= 1e-8);
    assert!(num(&v, "weight_relative_error") <= 1e-8);
    assert!(tmp.path().join("curve.csv").exists());
}

#[test]
fn missing_dt_names_the_key() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(config("linear_advection.toml")).unwrap().replace("dt = 1e-3", "");
    let cfg = write_config(tmp.path(), &text);
    let out = run(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn unknown_kernel_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(config("linear_advection.toml"))
        .unwrap()
        .replacen("kernel = { name = \"constant\" }", "kernel = { name = \"cauchy\" }", 1);
    let cfg = write_config(tmp.path(), &text);
    let out = run(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cauchy"));
}

#[test]
fn validate_demo_passes() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["validate", "--config", s(&config("nonlinear_demo.toml")), "--out", s(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = summary(tmp.path());
    assert_eq!(v["passed"], true);
    assert!(num(&v, "worst_margin") >= -1e-9);
}

#[test]
fn understated_rate_fails_validation() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(config("nonlinear_demo.toml")).unwrap();
    let (head, _) = text.split_once("[experiment]").unwrap();
    let text = format!("{head}[experiment]\nkind = \"validate\"\ndeclared_rate_sup = 1e-3\n");
    let cfg = write_config(tmp.path(), &text);
    let out = run(&["validate", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(&tmp.path().join("o"))["passed"], false);
}

const STILL: &str = r#"
dim = 1
[initial_measure]
particles = [[0.0, 1.0], [0.4, -0.5]]
[model]
h = 0.0
v0 = { outer = { name = "constant", value = 0.0 }, kernel = { name = "constant" }, direction = [1.0] }
[grid]
t_end = 1.0
dt = 0.05
"#;

#[test]
fn zero_model_validates() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), STILL);
    let out = run(&["validate", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn zero_model_sweep_is_flat() {
    let tmp = TempDir::new().unwrap();
    let text = format!(
        "{STILL}[experiment]\nkind = \"sweep\"\nh_min = -0.3\nh_max = 0.3\ncount = 4\n\
         objective = {{ type = \"mass_in_region\", lower = [-1.0], upper = [1.0] }}\n"
    );
    let cfg = write_config(tmp.path(), &text);
    let out = run(&["sweep", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(&tmp.path().join("o/sweep.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!((r[1] - rows[0][1]).abs() < 1e-14);
        assert!(r[2].abs() < 1e-12);
    }
}

#[test]
fn drift_sweep_gradients_follow_secants() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["sweep", "--config", s(&config("drift_exit.toml")), "--out", s(tmp.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = table(&tmp.path().join("sweep.csv"));
    assert_eq!(rows.len(), 9);
    for w in rows.windows(2) {
        // faster walkers leave sooner
        assert!(w[1][1] < w[0][1]);
        let secant = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
        assert!(secant < 0.0 && w[0][2] < 0.0 && w[1][2] < 0.0);
        let mean = 0.5 * (w[0][2] + w[1][2]);
        assert!((mean - secant).abs() <= 0.1 * secant.abs(), "{mean} vs {secant}");
    }
    let v = summary(tmp.path());
    assert!((num(&v, "h_star") - 0.4).abs() < 1e-12);
}

#[test]
fn sweep_requires_a_sweep_block() {
    let out = run(&["sweep", "--config", s(&config("linear_advection.toml")), "--out", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn norms_prints_one_row() {
    let out = run(&["norms", "--config", s(&config("example_1_1.toml"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "flat,z_lower,z_upper,tv");
    let vals: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    // a unit Dirac
    assert_eq!(vals[0], 1.0);
    assert_eq!(vals[3], 1.0);
    assert!(vals[1] <= vals[2] && vals[2] <= 1.0);

    let tmp = TempDir::new().unwrap();
    let m = tmp.path().join("m.csv");
    fs::write(&m, "x0,weight\n0,1\n0.01,-1\n").unwrap();
    let out = run(&["norms", "--config", s(&config("example_1_1.toml")), "--measure", s(&m)]);
    let text = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((vals[0] - 0.01).abs() < 1e-12);
    assert!(vals[1] <= vals[2] && vals[2] <= vals[0]);

    fs::write(&m, "x0,weight\n0,nan\n").unwrap();
    let out = run(&["norms", "--config", s(&config("example_1_1.toml")), "--measure", s(&m)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = config("drift_exit.toml");
    assert!(run(&["sweep", "--config", s(&cfg), "--out", s(a.path())]).status.success());
    let out = bin()
        .args(["sweep", "--config", s(&cfg), "--out", s(b.path()), "--threads", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    for f in ["sweep.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

/// Reduced demo: four particles, short horizon, a two-point continuity scan.
fn continuity_config(step: f64) -> String {
    format!(
        r#"
dim = 1
weight = "auto"
[initial_measure]
particles = [[-1.0, 0.3], [-0.2, -0.1], [0.5, 0.4], [1.2, 0.2]]
[model]
h = 0.0
v0 = {{ outer = {{ name = "tanh", gain = 1.0 }}, kernel = {{ name = "gaussian", sigma = 1.0 }}, direction = [1.0] }}
v1 = {{ outer = {{ name = "tanh", gain = 1.0 }}, kernel = {{ name = "gaussian", sigma = 0.5 }}, direction = [0.5] }}
m0 = {{ outer = {{ name = "sine", amplitude = 0.3, frequency = 1.0 }}, kernel = {{ name = "gaussian", sigma = 1.0 }} }}
m1 = {{ outer = {{ name = "gaussian", amplitude = 0.5, width = 1.0 }}, kernel = {{ name = "wendland", radius = 2.0 }} }}
[grid]
t_end = 1.0
dt = 0.02
[scheme]
contraction_target = 0.025
[experiment]
kind = "sensitivity"
rungs = 3
decay_steps = 3
continuity_h = [0.0, {step}]
"#
    )
}

#[test]
fn derivative_pairings_vary_linearly_in_h() {
    let mut gaps = Vec::new();
    for step in [0.1, 0.05] {
        let tmp = TempDir::new().unwrap();
        let cfg = write_config(tmp.path(), &continuity_config(step));
        let out = run(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        gaps.push(num(&summary(&tmp.path().join("o")), "continuity_max_pairing_gap"));
    }
    let ratio = gaps[0] / gaps[1];
    assert!(gaps[1] > 0.0 && (ratio - 2.0).abs() <= 0.5, "{gaps:?}");
}
