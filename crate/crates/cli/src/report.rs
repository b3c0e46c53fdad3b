//! Metrics, assertion checks and the artifacts of a run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::Assertion;
use crate::error::CliError;

/// Scalar metrics keyed by name; flags are stored as 0 or 1.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metrics(BTreeMap<String, f64>);

impl Metrics {
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn flag(&mut self, name: impl Into<String>, value: bool) {
        self.set(name, if value { 1.0 } else { 0.0 });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }
}

/// Files produced by a scenario, kept in memory until the run succeeds.
#[derive(Clone, Debug, Default)]
pub struct Artifacts(Vec<(String, String)>);

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.0.push((name.into(), content));
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|a| a.0.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|a| a.0 == name).map(|a| a.1.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(CliError::runtime)?;
        for (name, content) in &self.0 {
            fs::write(dir.join(name), content).map_err(CliError::runtime)?;
        }
        Ok(())
    }
}

/// CSV with a header line; numbers use 17 significant digits.
pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionResult {
    pub metric: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub value: Option<f64>,
    pub status: &'static str,
}

pub fn check(assertions: &[Assertion], metrics: &Metrics) -> Vec<AssertionResult> {
    assertions
        .iter()
        .map(|a| {
            let value = metrics.get(&a.metric);
            let pass = value.is_some_and(|v| a.min.is_none_or(|m| v >= m) && a.max.is_none_or(|m| v <= m));
            AssertionResult { metric: a.metric.clone(), min: a.min, max: a.max, value, status: if pass { "PASS" } else { "FAIL" } }
        })
        .collect()
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: &'static str,
    pub config: String,
    pub description: Option<String>,
    pub seed: u64,
    pub metrics: Metrics,
    pub assertions: Vec<AssertionResult>,
    pub status: &'static str,
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}
