use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn crib() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_crib"));
    cmd.env_remove("CRIB_OUT_DIR");
    cmd
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const SMALL_RUN: &str = r#"{
  "scenario": "crib-run",
  "input": { "kind": "gaussian", "delta_omega": 0.5, "dt": 0.1 },
  "medium": { "d": 20.0, "nz": 40, "n_detunings": 121, "span": 6.0 },
  "schedule": { "delay": 5.0, "storage": 6.0, "xi1": 0.3 },
  "assertions": [ { "metric": "efficiency", "min": 0.9 } ]
}"#;

#[test]
fn run_writes_summary_and_traces() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.json", SMALL_RUN);
    let out = tmp.path().join("out");
    let res = crib().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    assert_eq!(s["status"], "PASS");
    assert_eq!(s["scenario"], "crib-run");
    assert!(s["metrics"]["efficiency"].as_f64().unwrap() > 0.9);
    for name in s["artifacts"].as_array().unwrap() {
        assert!(out.join(name.as_str().unwrap()).is_file(), "{name}");
    }
    let echo = fs::read_to_string(out.join("echo.csv")).unwrap();
    assert!(echo.starts_with("t,re,im\n"));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("PASS efficiency"));
}

#[test]
fn failed_assertion_exits_one_and_keeps_artifacts() {
    let tmp = TempDir::new().unwrap();
    let text = SMALL_RUN.replace(r#""min": 0.9"#, r#""min": 1.5"#);
    let cfg = write(tmp.path(), "strict.json", &text);
    let out = tmp.path().join("out");
    let res = crib().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&res), 1);
    let s = summary(&out);
    assert_eq!(s["status"], "FAIL");
    assert_eq!(s["assertions"][0]["status"], "FAIL");
}

#[test]
fn schema_violations_exit_two_without_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("unknown_key", SMALL_RUN.replace(r#""scenario""#, r#""colour": 1, "scenario""#)),
        ("unknown_nested_key", SMALL_RUN.replace(r#""nz": 40"#, r#""nz": 40, "cells": 3"#)),
        ("unused_section", SMALL_RUN.replace(r#""scenario""#, r#""sweep": {"depths": [1]}, "scenario""#)),
        ("missing_section", SMALL_RUN.replace(r#""medium": { "d": 20.0, "nz": 40, "n_detunings": 121, "span": 6.0 },"#, "")),
        ("bad_value", SMALL_RUN.replace(r#""delta_omega": 0.5"#, r#""delta_omega": -0.5"#)),
        ("bad_medium", SMALL_RUN.replace(r#""nz": 40"#, r#""nz": 0"#)),
        ("empty_assertion", SMALL_RUN.replace(r#""min": 0.9"#, r#""metric2": 1"#)),
        ("not_json", "{ scenario: crib-run".to_string()),
        ("bad_scenario", SMALL_RUN.replace("crib-run", "crib-walk")),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), &format!("{name}.json"), &text);
        let out = tmp.path().join(name);
        let res = crib().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(code(&res), 2, "{name}: {}", String::from_utf8_lossy(&res.stderr));
        assert!(!out.exists(), "{name} left artifacts");
    }
    let res = crib().arg("run").arg(tmp.path().join("absent.json")).output().unwrap();
    assert_eq!(code(&res), 2);
}

#[test]
fn runtime_failure_exits_three_without_artifacts() {
    // Optical depth 2 per cell trips the solver's step check.
    let tmp = TempDir::new().unwrap();
    let text = SMALL_RUN.replace(r#""nz": 40"#, r#""nz": 10"#);
    let cfg = write(tmp.path(), "coarse.json", &text);
    let out = tmp.path().join("out");
    let res = crib().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(!out.exists());
}

#[test]
fn output_dir_resolution() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.json", SMALL_RUN);
    let root = tmp.path().join("root");
    let res = crib().arg("run").arg(&cfg).env("CRIB_OUT_DIR", &root).output().unwrap();
    assert_eq!(code(&res), 0);
    assert!(root.join("small/summary.json").is_file());

    let text = SMALL_RUN.replace(r#""scenario""#, r#""output_dir": "named", "scenario""#);
    let cfg = write(tmp.path(), "named.json", &text);
    let res = crib().arg("run").arg(&cfg).env("CRIB_OUT_DIR", &root).output().unwrap();
    assert_eq!(code(&res), 0);
    assert!(tmp.path().join("named/summary.json").is_file());

    let res = crib().arg("run").arg(&cfg).current_dir(tmp.path()).arg("--out").arg("explicit").output().unwrap();
    assert_eq!(code(&res), 0);
    assert!(tmp.path().join("explicit/summary.json").is_file());

    let cfg = write(tmp.path(), "plain.json", SMALL_RUN);
    let res = crib().arg("run").arg(&cfg).current_dir(tmp.path()).output().unwrap();
    assert_eq!(code(&res), 0);
    assert!(tmp.path().join("crib-out/plain/summary.json").is_file());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let cfg = scenarios().join("c7_timebin.json");
    let mut dirs = Vec::new();
    for threads in ["1", "4"] {
        let out = tmp.path().join(format!("t{threads}"));
        let res = crib().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--threads").arg(threads).output().unwrap();
        assert_eq!(code(&res), 0);
        dirs.push(out);
    }
    for name in ["summary.json", "solver_output.csv", "xi_grid.csv"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn file_input_resolves_against_the_config() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let cfg = write(tmp.path(), "small.json", SMALL_RUN);
    assert_eq!(code(&crib().arg("run").arg(&cfg).arg("--out").arg(&first).output().unwrap()), 0);
    fs::copy(first.join("input.csv"), tmp.path().join("trace.csv")).unwrap();
    let text = SMALL_RUN.replace(r#"{ "kind": "gaussian", "delta_omega": 0.5, "dt": 0.1 }"#, r#"{ "kind": "file", "path": "trace.csv" }"#);
    let cfg = write(tmp.path(), "from_file.json", &text);
    let second = tmp.path().join("second");
    assert_eq!(code(&crib().arg("run").arg(&cfg).arg("--out").arg(&second).output().unwrap()), 0);
    let (a, b) = (summary(&first), summary(&second));
    let (ea, eb) = (a["metrics"]["efficiency"].as_f64().unwrap(), b["metrics"]["efficiency"].as_f64().unwrap());
    assert!((ea - eb).abs() < 1e-12, "{ea} vs {eb}");
}

fn compare(a: &Path, b: &Path, tol: &str) -> (i32, Option<Value>) {
    let res = crib().arg("compare").arg(a).arg(b).arg("--tol").arg(tol).output().unwrap();
    (code(&res), serde_json::from_slice(&res.stdout).ok())
}

#[test]
fn compare_reports_fidelity_and_exit_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "small.json", SMALL_RUN);
    let out = tmp.path().join("out");
    assert_eq!(code(&crib().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap()), 0);

    let (c, report) = compare(&out.join("echo.csv"), &out.join("echo.csv"), "1e-12");
    assert_eq!(c, 0);
    let report = report.unwrap();
    assert!((report["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(report["max_abs_deviation"].as_f64().unwrap(), 0.0);

    // Solver echo against the ideal prediction.
    let (c, report) = compare(&out.join("echo.csv"), &out.join("ideal.csv"), "0.01");
    assert_eq!(c, 0);
    assert!(report.unwrap()["fidelity"].as_f64().unwrap() > 0.99);
}

#[test]
fn compare_detects_time_reversal() {
    // Asymmetric two-packet trace against its mirror image.
    let tmp = TempDir::new().unwrap();
    let mut a = String::from("t,re,im\n");
    let mut b = String::from("t,re,im\n");
    let g = |t: f64, c: f64| (-(t - c) * (t - c)).exp();
    for i in 0..=200 {
        let t = -10.0 + 0.1 * i as f64;
        a.push_str(&format!("{t},{},0\n", g(t, -3.0) + 0.4 * g(t, 3.0)));
        b.push_str(&format!("{t},{},0\n", g(-t, -3.0) + 0.4 * g(-t, 3.0)));
    }
    let (pa, pb) = (write(tmp.path(), "a.csv", &a), write(tmp.path(), "b.csv", &b));
    let (c, report) = compare(&pa, &pb, "1e-6");
    assert_eq!(c, 1);
    let f = report.unwrap()["fidelity"].as_f64().unwrap();
    assert!(f < 0.9, "{f}");
}

#[test]
fn compare_errors() {
    let tmp = TempDir::new().unwrap();
    let good = write(tmp.path(), "good.csv", "t,re,im\n0,1,0\n0.5,1,0\n1,0.5,0\n");
    let far = write(tmp.path(), "far.csv", "t,re,im\n10,1,0\n10.5,1,0\n11,0.5,0\n");
    let bad = write(tmp.path(), "bad.csv", "time,value\n0,1\n");
    assert_eq!(compare(&good, &bad, "0.1").0, 2);
    assert_eq!(compare(&good, &tmp.path().join("missing.csv"), "0.1").0, 2);
    assert_eq!(compare(&good, &good, "-1").0, 2);
    assert_eq!(compare(&good, &far, "0.1").0, 3);
}
