use std::fs;
use std::path::{Path, PathBuf};

use crib_cli::config::{Backend, ScenarioConfig, ScenarioKind};
use crib_cli::error::CliError;
use crib_cli::{load_config, output_dir, run_config};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn shipped() -> Vec<PathBuf> {
    let mut out = Vec::new();
    for dir in [scenarios(), scenarios().join("extra")] {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "json") {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

fn schema_error(text: &str) -> String {
    match ScenarioConfig::parse(text) {
        Err(CliError::Schema(m)) => m,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn every_shipped_config_parses() {
    let all = shipped();
    assert!(all.len() >= 12);
    for p in &all {
        let cfg = load_config(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(!cfg.assertions.is_empty(), "{}", p.display());
        assert!(cfg.description.is_some(), "{}", p.display());
    }
}

#[test]
fn one_config_per_criterion() {
    let names: Vec<String> = fs::read_dir(scenarios())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json"))
        .collect();
    for k in 1..=9 {
        let hits = names.iter().filter(|n| n.starts_with(&format!("c{k}_"))).count();
        assert_eq!(hits, 1, "criterion {k}");
    }
}

#[test]
fn section_rules() {
    let m = schema_error(r#"{"scenario": "ideal-map"}"#);
    assert!(m.contains("trials"), "{m}");
    let m = schema_error(r#"{"scenario": "ideal-map", "trials": {}, "xi_grid": [[0, 0]]}"#);
    assert!(m.contains("xi_grid"), "{m}");
    let m = schema_error(
        r#"{"scenario": "interferometer", "input": {"kind": "gaussian", "delta_omega": 1},
            "schedule": {"storage": 4}, "mz": {"delta_l": 6, "backend": "solver"}}"#,
    );
    assert!(m.contains("medium"), "{m}");
    let m = schema_error(
        r#"{"scenario": "oracle-check", "input": {"kind": "gaussian", "delta_omega": 1},
            "schedule": {"storage": 4},
            "oracle": {"ensemble": {"n_slices": 2, "nodes_per_slice": 2, "length": 1, "d": 1}, "depths": [1]}}"#,
    );
    assert!(m.contains("oracle-check"), "{m}");
    let m = schema_error(r#"{"scenario": "ideal-map", "trials": {"count": 2, "extra": 1}}"#);
    assert!(m.contains("extra"), "{m}");
}

#[test]
fn defaults_fill_in() {
    let cfg = ScenarioConfig::parse(
        r#"{"scenario": "interferometer", "input": {"kind": "gaussian", "delta_omega": 2},
            "schedule": {"storage": 40}, "mz": {"delta_l": 6}}"#,
    )
    .unwrap();
    assert_eq!(cfg.scenario, ScenarioKind::Interferometer);
    assert_eq!(cfg.seed, 0);
    let mz = cfg.mz.unwrap();
    assert_eq!(mz.backend, Backend::Ideal);
    assert_eq!(mz.alpha_points, 64);
    assert!(mz.blocking);
    assert_eq!(cfg.schedule.unwrap().delay, 5.0);
}

#[test]
fn output_dir_precedence() {
    let cfg = ScenarioConfig::parse(r#"{"scenario": "ideal-map", "trials": {}}"#).unwrap();
    let path = Path::new("/cfg/run_a.json");
    assert_eq!(output_dir(&cfg, path, Some(Path::new("/x")), Some(Path::new("/env"))), PathBuf::from("/x"));
    assert_eq!(output_dir(&cfg, path, None, Some(Path::new("/env"))), PathBuf::from("/env/run_a"));
    assert_eq!(output_dir(&cfg, path, None, None), PathBuf::from("crib-out/run_a"));
    let named = ScenarioConfig::parse(r#"{"scenario": "ideal-map", "trials": {}, "output_dir": "res"}"#).unwrap();
    assert_eq!(output_dir(&named, path, None, Some(Path::new("/env"))), PathBuf::from("/cfg/res"));
}

#[test]
fn ideal_map_trials_are_seeded() {
    let text = r#"{"scenario": "ideal-map", "seed": 5, "trials": {"count": 4}}"#;
    let path = Path::new("t.json");
    let a = run_config(&ScenarioConfig::parse(text).unwrap(), path).unwrap();
    let b = run_config(&ScenarioConfig::parse(text).unwrap(), path).unwrap();
    assert_eq!(a.artifacts.get("trials.csv"), b.artifacts.get("trials.csv"));
    let c = run_config(&ScenarioConfig::parse(&text.replace("5", "6")).unwrap(), path).unwrap();
    assert_ne!(a.artifacts.get("trials.csv"), c.artifacts.get("trials.csv"));
    assert_eq!(a.summary.metrics.get("trials"), Some(4.0));
}

#[test]
fn extra_configs_pass() {
    for p in shipped().into_iter().filter(|p| p.parent().unwrap().ends_with("extra")) {
        let r = run_config(&load_config(&p).unwrap(), &p).unwrap();
        assert!(r.summary.passed(), "{}: {:?}", p.display(), r.summary.assertions);
    }
}

#[test]
fn solver_backed_interferometer() {
    let text = r#"{
      "scenario": "interferometer",
      "input": { "kind": "gaussian", "delta_omega": 1.0, "dt": 0.1 },
      "medium": { "d": 30.0, "nz": 60, "n_detunings": 201, "span": 8.0 },
      "schedule": { "delay": 5.0, "storage": 10.0 },
      "mz": { "delta_l": 12.0, "alpha_points": 16, "backend": "solver", "blocking": false }
    }"#;
    let r = run_config(&ScenarioConfig::parse(text).unwrap(), Path::new("mz.json")).unwrap();
    let m = &r.summary.metrics;
    let eta = m.get("memory_efficiency").unwrap();
    assert!(eta > 0.99, "{eta}");
    assert!((m.get("fringe_period").unwrap() - std::f64::consts::PI).abs() < 1e-9);
    assert!(m.get("visibility").unwrap() > 0.999);
    // Side pulses carry a sixteenth of the retrieved energy each.
    assert!((m.get("i_early").unwrap() / eta - 1.0 / 16.0).abs() < 1e-3);
    assert!(r.artifacts.get("central_ss.csv").is_none());
}

#[test]
fn summary_lists_every_artifact() {
    let p = scenarios().join("c2_packet_order.json");
    let r = run_config(&load_config(&p).unwrap(), &p).unwrap();
    let mut names = r.artifacts.names();
    names.push("summary.json".into());
    assert_eq!(r.summary.artifacts, names);
    let ledger = r.artifacts.get("ledger.csv").unwrap();
    assert!(ledger.starts_with("stage,field_in,field_out,coherence_in,coherence,leaked,imbalance\n"));
    assert_eq!(ledger.lines().count(), 6);
}
