//! Scenario configuration files.
//!
//! Every key is checked: unknown keys and sections that the chosen scenario
//! does not use are schema errors.

use std::path::PathBuf;

use crib_core::envelopes::{make_gaussian, DoublePacket, SampledEnvelope, TimeGrid};
use crib_core::interferometer::MzConfig;
use crib_core::medium::MediumSpec;
use crib_core::oracle::{DetuningDrive, EnsembleSpec};
use crib_core::schedule::ProtocolSchedule;
use crib_core::solver::SolverConfig;
use crib_core::timebin::QubitSpec;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    IdealMap,
    CribRun,
    DepthSweep,
    Timebin,
    Interferometer,
    OracleCheck,
    ReversalIdentity,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::IdealMap => "ideal-map",
            ScenarioKind::CribRun => "crib-run",
            ScenarioKind::DepthSweep => "depth-sweep",
            ScenarioKind::Timebin => "timebin",
            ScenarioKind::Interferometer => "interferometer",
            ScenarioKind::OracleCheck => "oracle-check",
            ScenarioKind::ReversalIdentity => "reversal-identity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub medium: Option<MediumSpec>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub qubit: Option<QubitSpec>,
    #[serde(default)]
    pub mz: Option<MzSpec>,
    #[serde(default)]
    pub trials: Option<TrialsSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub reversal: Option<ReversalSpec>,
    #[serde(default)]
    pub controls: Option<ControlsSpec>,
    #[serde(default)]
    pub xi_grid: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

/// Input field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    Gaussian {
        delta_omega: f64,
        #[serde(default)]
        t_center: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    DoublePacket {
        alpha: [f64; 2],
        beta: [f64; 2],
        tau: f64,
        #[serde(default)]
        phi1: f64,
        #[serde(default)]
        phi2: f64,
        delta_omega: f64,
        #[serde(default)]
        t_center: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// A `t,re,im` trace; relative paths resolve against the config file.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.1
}

fn default_margin() -> f64 {
    7.0
}

impl InputSpec {
    pub fn build(&self, base: &std::path::Path) -> Result<SampledEnvelope<f64>, CliError> {
        match *self {
            InputSpec::Gaussian { delta_omega, t_center, phase, amplitude, dt, margin } => {
                check_positive("input.delta_omega", delta_omega)?;
                check_positive("input.margin", margin)?;
                let half = margin / delta_omega;
                let grid = TimeGrid::spanning(t_center - half, t_center + half, dt).map_err(CliError::schema)?;
                make_gaussian(grid, delta_omega, t_center, phase, amplitude).map_err(CliError::schema)
            }
            InputSpec::DoublePacket { alpha, beta, tau, phi1, phi2, delta_omega, t_center, dt, margin } => {
                check_positive("input.delta_omega", delta_omega)?;
                check_positive("input.margin", margin)?;
                let half = margin / delta_omega;
                let grid = TimeGrid::spanning(t_center - half, t_center + tau + half, dt).map_err(CliError::schema)?;
                let packet = DoublePacket::new(Complex::new(alpha[0], alpha[1]), Complex::new(beta[0], beta[1]), tau, phi1, phi2, delta_omega)
                    .centered_at(t_center);
                let (env, warning) = packet.build(grid).map_err(CliError::schema)?;
                if let Some(w) = warning {
                    eprintln!(
                        "warning: packets overlap (τδω = {:.3} below {:.1}, overlap {:.2e})",
                        w.separation, w.threshold, w.overlap
                    );
                }
                Ok(env)
            }
            InputSpec::File { ref path } => {
                let path = if path.is_absolute() { path.clone() } else { base.join(path) };
                crib_core::envelopes::read_csv(&path).map_err(CliError::schema)
            }
        }
    }

    /// Bandwidth for the oracle mode window.
    pub fn delta_omega(&self) -> Option<f64> {
        match *self {
            InputSpec::Gaussian { delta_omega, .. } | InputSpec::DoublePacket { delta_omega, .. } => Some(delta_omega),
            InputSpec::File { .. } => None,
        }
    }
}

/// Protocol timing. `t1` defaults to `delay` after the last input sample and
/// pulse 2 fires `storage` after pulse 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default = "default_delay")]
    pub delay: f64,
    pub storage: f64,
    #[serde(default)]
    pub xi1: f64,
    #[serde(default)]
    pub xi2: f64,
    #[serde(default)]
    pub omega32: f64,
    #[serde(default)]
    pub decoherence_rate: f64,
    #[serde(default)]
    pub echo_tail: f64,
}

fn default_delay() -> f64 {
    5.0
}

impl ScheduleSpec {
    pub fn build(&self, input_end: f64) -> Result<ProtocolSchedule<f64>, CliError> {
        check_positive("schedule.storage", self.storage)?;
        if self.decoherence_rate < 0.0 || self.echo_tail < 0.0 {
            return Err(CliError::Schema("schedule.decoherence_rate and schedule.echo_tail must be non-negative".into()));
        }
        let t1 = self.t1.unwrap_or(input_end + self.delay);
        if t1 <= input_end {
            return Err(CliError::Schema(format!("schedule.t1 = {t1} must come after the input ends at {input_end}")));
        }
        Ok(ProtocolSchedule::mirrored(t1, t1 + self.storage / 2.0)
            .with_phases(self.xi1, self.xi2)
            .with_omega32(self.omega32))
    }
}

/// Interferometer and fringe sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MzSpec {
    pub delta_l: f64,
    #[serde(default = "half")]
    pub coupler_ratio: f64,
    #[serde(default = "default_separation")]
    pub min_separation: f64,
    /// Points of the uniform `α` sweep over `[0, 2π)`.
    #[serde(default = "default_alpha_points")]
    pub alpha_points: usize,
    #[serde(default)]
    pub backend: Backend,
    /// Run the four single-path configurations as well.
    #[serde(default = "yes")]
    pub blocking: bool,
}

fn half() -> f64 {
    0.5
}

fn default_separation() -> f64 {
    10.0
}

fn default_alpha_points() -> usize {
    64
}

fn yes() -> bool {
    true
}

impl MzSpec {
    pub fn build(&self) -> Result<MzConfig<f64>, CliError> {
        let mut mz = MzConfig::new(self.delta_l, 0.0).and_then(|m| m.with_coupler_ratio(self.coupler_ratio)).map_err(CliError::schema)?;
        mz.min_separation = self.min_separation;
        if self.alpha_points < 4 {
            return Err(CliError::Schema("mz.alpha_points must be at least 4".into()));
        }
        Ok(mz)
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.alpha_points).map(|k| std::f64::consts::TAU * k as f64 / self.alpha_points as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Ideal,
    Solver,
    PlainDelay,
}

/// Randomized multi-packet inputs for the ideal map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsSpec {
    #[serde(default = "default_trials")]
    pub count: usize,
    #[serde(default = "default_max_packets")]
    pub max_packets: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_trials() -> usize {
    20
}

fn default_max_packets() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub depths: Vec<f64>,
}

/// Brute-force ensemble. In `depth-sweep` it validates the efficiency law
/// at `depths` with its own `input`; in `oracle-check` it uses the top-level
/// input and schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub mode_half_width: Option<f64>,
    #[serde(default)]
    pub depths: Option<Vec<f64>>,
    #[serde(default)]
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
}

/// Product-identity check of the oracle stage propagators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReversalSpec {
    pub ensemble: EnsembleSpec,
    pub input: InputSpec,
    /// Time at which the input is loaded into the modes.
    pub t_start: f64,
    pub t1: f64,
    pub t_inv: f64,
    pub box_length: f64,
    #[serde(default)]
    pub mode_half_width: Option<f64>,
    pub drive: DetuningDrive,
    pub steps: Vec<usize>,
    /// Shift of `t₂` for the broken-mirror comparison; 0 skips it.
    #[serde(default)]
    pub broken_t2_shift: f64,
}

/// Negative controls attached to a `crib-run`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsSpec {
    /// Rerun without the detuning inversion.
    #[serde(default)]
    pub no_inversion: bool,
    /// Fringe sweep with the memory replaced by a delay of `schedule.storage`.
    #[serde(default)]
    pub plain_delay: Option<MzSpec>,
}

/// Bound on one summary metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub metric: String,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

fn check_positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Schema(format!("{name} must be positive")))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.check_sections()?;
        Ok(cfg)
    }

    /// Required and permitted sections per scenario.
    fn check_sections(&self) -> Result<(), CliError> {
        use ScenarioKind::*;
        let present: [(&str, bool); 11] = [
            ("input", self.input.is_some()),
            ("medium", self.medium.is_some()),
            ("schedule", self.schedule.is_some()),
            ("solver", self.solver.is_some()),
            ("qubit", self.qubit.is_some()),
            ("mz", self.mz.is_some()),
            ("trials", self.trials.is_some()),
            ("sweep", self.sweep.is_some()),
            ("oracle", self.oracle.is_some()),
            ("reversal", self.reversal.is_some()),
            ("controls", self.controls.is_some()),
        ];
        let (required, optional): (&[&str], &[&str]) = match self.scenario {
            IdealMap => (&["trials"], &[]),
            CribRun => (&["input", "medium", "schedule"], &["solver", "controls"]),
            DepthSweep => (&["input", "medium", "schedule", "sweep"], &["solver", "oracle"]),
            Timebin => (&["qubit", "medium", "schedule"], &["solver"]),
            Interferometer => (&["input", "mz", "schedule"], &["medium", "solver"]),
            OracleCheck => (&["input", "schedule", "oracle"], &["solver", "reversal"]),
            ReversalIdentity => (&["reversal"], &[]),
        };
        for (name, is_present) in present {
            if is_present && !required.contains(&name) && !optional.contains(&name) {
                return Err(CliError::Schema(format!("section `{name}` is not used by scenario {}", self.scenario.name())));
            }
            if !is_present && required.contains(&name) {
                return Err(CliError::Schema(format!("scenario {} needs a `{name}` section", self.scenario.name())));
            }
        }
        if self.xi_grid.is_some() && self.scenario != Timebin {
            return Err(CliError::Schema("`xi_grid` is only used by the timebin scenario".into()));
        }
        if self.scenario == Interferometer {
            let backend = self.mz.as_ref().map(|m| m.backend).unwrap_or_default();
            if backend == Backend::Solver && self.medium.is_none() {
                return Err(CliError::Schema("the solver backend needs a `medium` section".into()));
            }
        }
        if let Some(o) = &self.oracle {
            let sweep = self.scenario == DepthSweep;
            if sweep && (o.depths.is_none() || o.input.is_none()) {
                return Err(CliError::Schema("oracle validation in depth-sweep needs `depths` and `input`".into()));
            }
            if !sweep && (o.depths.is_some() || o.input.is_some() || o.schedule.is_some()) {
                return Err(CliError::Schema("oracle-check takes depth, input and schedule from the scenario".into()));
            }
        }
        for a in &self.assertions {
            if a.min.is_none() && a.max.is_none() {
                return Err(CliError::Schema(format!("assertion on `{}` needs `min` or `max`", a.metric)));
            }
        }
        Ok(())
    }
}
