use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sectess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sectess")).args(args).env_remove("SECTESS_THREADS").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = sectess(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn jfunc_pinned_value() {
    let v = ok_json(&["jfunc", "--n", "3", "--k", "2", "--beta", "0"]);
    assert!((v["value"].as_f64().unwrap() - 1.5).abs() < 1e-10);
    let v = ok_json(&["jfunc", "--n", "3", "--k", "1", "--beta", "inf"]);
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn formulas_volume_on_line() {
    let v = ok_json(&["formulas", "volume", "--d", "2", "--l", "1", "--rho", "1"]);
    assert!((v["value"].as_f64().unwrap() - PI / 4.0).abs() < 1e-10);
    assert!(v["components"]["j_values_used"].is_array());
    assert!(v["error_estimate"].as_f64().unwrap() >= 0.0);
    // Seed-free.
    assert_eq!(v, ok_json(&["--seed", "9", "formulas", "volume", "--d", "2", "--l", "1", "--rho", "1"]));
}

#[test]
fn tables_reproduce_entries() {
    let out = sectess(&["tables", "--which", "2"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let row = csv.lines().find(|l| l.starts_with("4,3,0,")).unwrap();
    let v: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((v / (10240.0 / 401.0) - 1.0).abs() < 1e-6);
    assert_eq!(csv.lines().count(), 23);

    let dir = tempfile::tempdir().unwrap();
    let t1 = path(dir.path(), "t1.csv");
    assert!(sectess(&["tables", "--which", "1", "--out", &t1]).status.success());
    let csv = fs::read_to_string(&t1).unwrap();
    assert_eq!(csv.lines().count(), 16);
    assert!(csv.lines().any(|l| l.starts_with("2,1,0.785398")));
}

#[test]
fn errors_are_json_on_stderr() {
    let out = sectess(&["jfunc", "--n", "3", "--k", "5", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["kind"], "domain");
    assert!(e["message"].as_str().unwrap().contains("k"));

    let out = sectess(&["formulas", "volume", "--d", "2"]);
    assert_eq!(out.status.code(), Some(1));

    let out = sectess(&["tables", "--which", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let e: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(e["kind"], "usage");
}

#[test]
fn simulate_render_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (p, d, svg) = (path(dir.path(), "p.json"), path(dir.path(), "d.json"), path(dir.path(), "fig.svg"));
    let args = ["--seed", "42", "simulate", "--model", "beta", "--beta", "5", "--radius", "3", "--certify", "--out", &p, "--diagram", &d];
    assert!(sectess(&args).status.success());
    let first = fs::read_to_string(&p).unwrap();
    let doc: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(doc["kind"], "points");
    assert_eq!(doc["data"]["window"]["seed"], 42);
    assert!(!doc["data"]["points"].as_array().unwrap().is_empty());

    // The resolved config alone reproduces the run.
    let cfg = path(dir.path(), "p.config.json");
    let p2 = path(dir.path(), "replay.json");
    assert!(sectess(&["simulate", "--config", &cfg, "--out", &p2]).status.success());
    assert_eq!(fs::read_to_string(&p2).unwrap(), first);

    assert!(sectess(&["render", "--input", &d, "--out", &svg, "--clip-radius", "3"]).status.success());
    let a = fs::read_to_string(&svg).unwrap();
    assert!(a.starts_with("<?xml") && a.contains("<path"));
    assert!(sectess(&["render", "--input", &d, "--out", &svg, "--clip-radius", "3"]).status.success());
    assert_eq!(fs::read_to_string(&svg).unwrap(), a);

    // A config of another subcommand is refused.
    let out = sectess(&["section", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn section_points_are_mapped() {
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "s.json");
    assert!(sectess(&["section", "--d", "4", "--l", "2", "--radius", "2", "--out", &p]).status.success());
    let doc: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    let pts = doc["data"]["points"].as_array().unwrap();
    assert!(!pts.is_empty());
    assert!(pts.iter().all(|q| q["h"].as_f64().unwrap() >= 0.0 && q["v"].as_array().unwrap().len() == 2));
}

#[test]
fn mc_verify_volume_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "run.json");
    fs::write(
        &cfg,
        r#"{"source": {"source": "model", "model": {"model": "poisson_voronoi", "d": 2, "rho": 1.0}},
            "mc": {"r_obs": 5.0, "replicates": 6, "min_cells": 50}}"#,
    )
    .unwrap();
    let out = path(dir.path(), "report.json");
    let res = sectess(&["--seed", "3", "mc", "verify-volume", "--config", &cfg, "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = fs::read_to_string(&out).unwrap();
    let doc: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["data"]["reports"].as_array().unwrap().len(), 3);
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("statistic,estimate,standard_error,target,z_score,p_value,pass,replicates,sample_size\n"));

    let resolved = path(dir.path(), "report.config.json");
    let again = path(dir.path(), "again.json");
    assert!(sectess(&["mc", "verify-volume", "--config", &resolved, "--out", &again]).status.success());
    assert_eq!(fs::read_to_string(&again).unwrap(), report);

    let threaded = path(dir.path(), "threaded.json");
    let res = Command::new(env!("CARGO_BIN_EXE_sectess"))
        .args(["mc", "verify-volume", "--config", &resolved, "--out", &threaded])
        .env("SECTESS_THREADS", "4")
        .output()
        .unwrap();
    assert!(res.status.success());
    assert_eq!(fs::read_to_string(&threaded).unwrap(), report);
}
