use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bbspike(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbspike"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SOLVER_THREADS")
        .output()
        .expect("binary runs")
}

fn make(template: &str, dir: &Path) -> Value {
    let out = bbspike(&["make-scenario", template, "--out", "scenario.json"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&fs::read_to_string(dir.join("scenario.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) {
    fs::write(dir.join(name), v.to_string()).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn static_scenario_writes_a_consistent_bundle() {
    let dir = tempfile::tempdir().unwrap();
    make("static", dir.path());
    let out = bbspike(&["-q", "run", "--config", "scenario.json", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let b = dir.path().join("b");
    let metrics = json(&b.join("metrics.json"));
    assert_eq!(metrics["p"], 1);
    assert!(metrics["rmse"].as_f64().unwrap() <= 1e-2);
    assert!(metrics["gap"].as_f64().unwrap() <= 1e-6);
    assert_eq!(metrics["converged"], true);
    for name in ["measure.json", "metrics.json", "certificates.json"] {
        let v = json(&b.join(name));
        assert_eq!(v["run_id"], "static", "{name}");
        assert_eq!(v["seed"], 1, "{name}");
    }
    assert_eq!(json(&b.join("certificates.json"))["verdict"], true);

    let curves = fs::read_to_string(b.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().next(), Some("atom_id,t,x1,mass"));
    assert_eq!(curves.lines().count(), 1 + 101);
    let log = fs::read_to_string(b.join("iterations.csv")).unwrap();
    assert_eq!(log, fs::read_to_string(b.join("convergence.csv")).unwrap());
    assert!(log.starts_with("iteration,objective,j_value,fidelity,gap,atom_count,wall_time_s\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    make("crossing", dir.path());
    for out in ["a", "b"] {
        let res = bbspike(&["-q", "run", "scenario.json", "--out", out], dir.path());
        assert_eq!(res.status.code(), Some(0));
    }
    for name in ["metrics.json", "measure.json", "certificates.json", "curves.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs");
    }
    let metrics = json(&dir.path().join("a/metrics.json"));
    assert_eq!(metrics["p"], 2);
    assert!(metrics["rmse"].as_f64().unwrap() <= 5e-2);
}

#[test]
fn missing_beta_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = make("static", dir.path());
    s["solver"].as_object_mut().unwrap().remove("beta");
    write(dir.path(), "bad.json", &s);
    let out = bbspike(&["run", "bad.json", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.beta"));
    assert!(!dir.path().join("b").exists());
}

#[test]
fn unknown_keys_and_bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = make("static", dir.path());
    s["observation"]["sigma"] = 0.1.into();
    write(dir.path(), "extra.json", &s);
    let out = bbspike(&["run", "extra.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("observation"));

    let mut s = make("static", dir.path());
    s["observation"]["times"] = serde_json::json!([0.75, 0.25]);
    write(dir.path(), "order.json", &s);
    assert_eq!(bbspike(&["run", "order.json"], dir.path()).status.code(), Some(2));

    assert_eq!(bbspike(&["run", "missing.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_the_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    make("generated", dir.path());
    let out = bbspike(&["-q", "run", "scenario.json", "--seed", "15", "--out", "b"], dir.path());
    assert!(out.status.code() == Some(0) || out.status.code() == Some(3));
    assert_eq!(json(&dir.path().join("b/metrics.json"))["seed"], 15);
    assert_eq!(json(&dir.path().join("b/measure.json"))["seed"], 15);
}

#[test]
fn non_convergence_exits_with_three_and_still_writes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = make("crossing", dir.path());
    s["solver"]["max_outer_iterations"] = 1.into();
    write(dir.path(), "short.json", &s);
    let out = bbspike(&["-q", "run", "short.json", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let metrics = json(&dir.path().join("b/metrics.json"));
    assert_eq!(metrics["converged"], false);
    assert!(dir.path().join("b/curves.csv").exists());
}

#[test]
fn certify_accepts_bundles_and_rejects_tampered_masses() {
    let dir = tempfile::tempdir().unwrap();
    make("crossing", dir.path());
    assert!(bbspike(&["-q", "run", "scenario.json", "--out", "b"], dir.path()).status.success());
    let out = bbspike(&["-q", "certify", "b/measure.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["atoms"].as_array().unwrap().len(), 2);
    assert_eq!(report["verdict"], true);

    let mut m = json(&dir.path().join("b/measure.json"));
    let mass = m["measure"]["atoms"][0]["mass"].as_f64().unwrap();
    m["measure"]["atoms"][0]["mass"] = (1.5 * mass).into();
    write(dir.path(), "tampered.json", &m);
    let out = bbspike(&["-q", "certify", "tampered.json", "--out", "report.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["verdict"], false);
    assert_eq!(report["atoms"][1]["verdict"], true);

    // a bare measure without the bundle wrapper
    write(dir.path(), "bare.json", &m["measure"]);
    assert_eq!(bbspike(&["-q", "certify", "bare.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn oracle_suite_passes_on_coarse_instances() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "suite.json", &serde_json::json!({"instances": 5, "seed": 3}));
    let out = bbspike(&["-q", "oracle-lmo", "suite.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["instances"].as_array().unwrap().len(), 5);
    assert!(report["max_raw_gap"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn make_scenario_rejects_unknown_templates() {
    let dir = tempfile::tempdir().unwrap();
    let out = bbspike(&["make-scenario", "spiral"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("static"));
}

#[test]
fn solver_threads_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    make("static", dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_bbspike"))
        .args(["run", "scenario.json"])
        .current_dir(dir.path())
        .env("SOLVER_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_bbspike"))
        .args(["-q", "run", "scenario.json", "--out", "b"])
        .current_dir(dir.path())
        .env("SOLVER_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
