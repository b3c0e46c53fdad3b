//! Scenario runner behind the `crib` binary.

pub mod compare;
pub mod config;
pub mod error;
pub mod report;
pub mod scenarios;

use std::fs;
use std::path::{Path, PathBuf};

use config::ScenarioConfig;
use error::CliError;
use report::{check, Artifacts, Summary};

/// Environment variable naming the default output root.
pub const OUT_DIR_ENV: &str = "CRIB_OUT_DIR";

/// A finished run, not yet written to disk.
#[derive(Debug)]
pub struct RunResult {
    pub summary: Summary,
    pub artifacts: Artifacts,
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    ScenarioConfig::parse(&text)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into())
}

/// `--out`, then `output_dir` from the config, then `$CRIB_OUT_DIR/<stem>`,
/// then `crib-out/<stem>`.
pub fn output_dir(cfg: &ScenarioConfig, config_path: &Path, cli_out: Option<&Path>, env_root: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output_dir {
        return if p.is_absolute() { p.clone() } else { base_dir(config_path).join(p) };
    }
    match env_root {
        Some(root) => root.join(stem(config_path)),
        None => PathBuf::from("crib-out").join(stem(config_path)),
    }
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Runs a parsed config and checks its assertions.
pub fn run_config(cfg: &ScenarioConfig, config_path: &Path) -> Result<RunResult, CliError> {
    let outcome = scenarios::execute(cfg, &base_dir(config_path))?;
    let assertions = check(&cfg.assertions, &outcome.metrics);
    let status = if assertions.iter().all(|a| a.status == "PASS") { "PASS" } else { "FAIL" };
    let mut names = outcome.artifacts.names();
    names.push("summary.json".into());
    let summary = Summary {
        scenario: cfg.scenario.name(),
        config: config_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        description: cfg.description.clone(),
        seed: cfg.seed,
        metrics: outcome.metrics,
        assertions,
        status,
        artifacts: names,
    };
    Ok(RunResult { summary, artifacts: outcome.artifacts })
}

impl RunResult {
    /// Writes every artifact and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        self.artifacts.write_all(dir)?;
        let json = serde_json::to_string_pretty(&self.summary).map_err(CliError::runtime)?;
        fs::write(dir.join("summary.json"), json + "\n").map_err(CliError::runtime)
    }
}
