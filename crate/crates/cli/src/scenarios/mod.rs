//! One runner per scenario kind. Each builds all of its inputs first, so a
//! bad value surfaces as a config error before any stage runs.

mod crib_run;
mod depth_sweep;
mod ideal_map;
mod interferometer;
mod oracle_check;
mod timebin;

use std::path::Path;

use crib_core::envelopes::{to_csv_string, SampledEnvelope};
use crib_core::oracle::{
    box_length_for, convergence_order, evolve, mode_half_width, reversal_deviation, verify_reversal_identity,
    DiscreteSystem, EnsembleSpec, OracleRun, ReversalReport,
};
use crib_core::schedule::ProtocolSchedule;
use crib_core::solver::{run_protocol, ProtocolOptions, ProtocolReport, SolverConfig};
use rayon::prelude::*;

use crate::config::{InputSpec, ReversalSpec, ScenarioConfig, ScenarioKind, ScheduleSpec};
use crate::error::CliError;
use crate::report::{table, Artifacts, Metrics};

#[derive(Debug, Default)]
pub struct Outcome {
    pub metrics: Metrics,
    pub artifacts: Artifacts,
}

impl Outcome {
    fn envelope(&mut self, name: &str, env: &SampledEnvelope<f64>) {
        self.artifacts.add(name, to_csv_string(env));
    }
}

/// Runs a parsed config. `base` resolves relative paths inside it.
pub fn execute(cfg: &ScenarioConfig, base: &Path) -> Result<Outcome, CliError> {
    match cfg.scenario {
        ScenarioKind::IdealMap => ideal_map::run(cfg),
        ScenarioKind::CribRun => crib_run::run(cfg, base),
        ScenarioKind::DepthSweep => depth_sweep::run(cfg, base),
        ScenarioKind::Timebin => timebin::run(cfg),
        ScenarioKind::Interferometer => interferometer::run(cfg, base),
        ScenarioKind::OracleCheck => oracle_check::run(cfg, base),
        ScenarioKind::ReversalIdentity => {
            let mut out = Outcome::default();
            let spec = cfg.reversal.as_ref().expect("checked by the schema");
            let prepared = PreparedReversal::new(spec, base)?;
            prepared.run(&mut out)?;
            Ok(out)
        }
    }
}

fn options(cfg: &ScenarioConfig, schedule: &ScheduleSpec) -> ProtocolOptions<f64> {
    ProtocolOptions { solver: cfg.solver.unwrap_or_default(), invert: true, echo_tail: schedule.echo_tail }
}

/// Moves `t₁` onto the input sample boundaries and `t₂ − t₁` onto a whole
/// number of double steps, so that every event lies on the oracle step grid.
fn snapped(schedule: &ProtocolSchedule<f64>, input: &SampledEnvelope<f64>) -> ProtocolSchedule<f64> {
    let dt = input.dt();
    let u0 = input.t_start() - dt / 2.0;
    let t1 = u0 + ((schedule.t1 - u0) / dt).round() * dt;
    let half = ((schedule.t2 - schedule.t1) / (2.0 * dt)).round().max(1.0);
    ProtocolSchedule::mirrored(t1, t1 + half * dt).with_phases(schedule.xi1, schedule.xi2).with_omega32(schedule.omega32)
}

pub(crate) fn fmt_depth(d: f64) -> String {
    if d.fract() == 0.0 {
        format!("{d:.0}")
    } else {
        format!("{d}")
    }
}

/// Solver and oracle on the same atoms, input and schedule.
pub(crate) struct OracleComparison {
    pub solver: ProtocolReport<f64>,
    pub oracle: OracleRun<f64>,
    pub atoms: usize,
    pub modes: usize,
}

pub(crate) fn half_width(explicit: Option<f64>, input: &InputSpec) -> Result<f64, CliError> {
    explicit
        .or_else(|| input.delta_omega().map(mode_half_width))
        .ok_or_else(|| CliError::Schema("oracle runs on a trace input need `mode_half_width`".into()))
}

pub(crate) fn compare_with_oracle(
    ensemble: &EnsembleSpec,
    input: &SampledEnvelope<f64>,
    schedule: &ProtocolSchedule<f64>,
    half_width: f64,
    solver: SolverConfig,
    echo_tail: f64,
) -> Result<OracleComparison, CliError> {
    let medium = ensemble.solver_medium::<f64>().map_err(CliError::schema)?;
    let schedule = snapped(schedule, input);
    let options = ProtocolOptions { solver, invert: true, echo_tail };
    let report = run_protocol(input, &medium, &schedule, 0.0, &options)?;
    let dt = input.dt();
    let u0 = input.t_start() - dt / 2.0;
    let echo_duration = report.echo.len() as f64 * dt;
    let lbox = box_length_for(input, &schedule, u0, ensemble.length, echo_duration);
    let mut system = DiscreteSystem::new(ensemble, half_width, lbox, u0, dt)?;
    system.load_input(input);
    let oracle = evolve(&system, &schedule, echo_duration)?;
    Ok(OracleComparison { atoms: system.n_atoms(), modes: system.n_modes(), solver: report, oracle })
}

pub(crate) struct PreparedReversal<'a> {
    spec: &'a ReversalSpec,
    system: DiscreteSystem<f64>,
    schedule: ProtocolSchedule<f64>,
}

impl<'a> PreparedReversal<'a> {
    pub fn new(spec: &'a ReversalSpec, base: &Path) -> Result<Self, CliError> {
        if spec.steps.len() < 2 || spec.steps.contains(&0) {
            return Err(CliError::Schema("reversal.steps needs at least two positive step counts".into()));
        }
        let input = spec.input.build(base)?;
        let hw = half_width(spec.mode_half_width, &spec.input)?;
        let mut system =
            DiscreteSystem::new(&spec.ensemble, hw, spec.box_length, spec.t_start, input.dt()).map_err(CliError::schema)?;
        system.load_input(&input);
        let schedule = ProtocolSchedule::mirrored(spec.t1, spec.t_inv);
        schedule.validate().map_err(CliError::schema)?;
        if spec.t1 <= spec.t_start {
            return Err(CliError::Schema("reversal.t1 must follow reversal.t_start".into()));
        }
        Ok(Self { spec, system, schedule })
    }

    pub fn run(&self, out: &mut Outcome) -> Result<(), CliError> {
        let drive = self.spec.drive;
        let reports: Vec<ReversalReport> = self
            .spec
            .steps
            .par_iter()
            .map(|&m| verify_reversal_identity(&self.system, &self.schedule, drive, m))
            .collect::<Result<_, _>>()?;
        let m = &mut out.metrics;
        m.set("reversal_atoms", self.system.n_atoms() as f64);
        m.set("reversal_modes", self.system.n_modes() as f64);
        m.set("reversal_order", convergence_order(&reports).unwrap_or(f64::NAN));
        m.flag("reversal_decreasing", reports.windows(2).all(|w| w[1].deviation < w[0].deviation));
        m.set("reversal_deviation_coarsest", reports[0].deviation);
        m.set("reversal_deviation_finest", reports[reports.len() - 1].deviation);
        let norm = reports.iter().map(|r| r.max_norm_error).fold(0.0, f64::max);
        let mut rows: Vec<Vec<f64>> =
            reports.iter().map(|r| vec![r.steps as f64, r.dt, 1.0, r.deviation, r.max_norm_error]).collect();
        if self.spec.broken_t2_shift != 0.0 {
            let finest = *self.spec.steps.iter().max().unwrap();
            let broken = ProtocolSchedule { t2: self.schedule.t2 + self.spec.broken_t2_shift, ..self.schedule };
            let r = reversal_deviation(&self.system, &broken, drive, finest)?;
            m.set("reversal_broken_deviation", r.deviation);
            m.set("reversal_broken_ratio", r.deviation / reports[reports.len() - 1].deviation);
            rows.push(vec![r.steps as f64, r.dt, 0.0, r.deviation, r.max_norm_error]);
            m.set("reversal_max_norm_error", norm.max(r.max_norm_error));
        } else {
            m.set("reversal_max_norm_error", norm);
        }
        out.artifacts.add("reversal.csv", table(&["steps", "dt", "mirrored", "deviation", "max_norm_error"], rows));
        Ok(())
    }
}
