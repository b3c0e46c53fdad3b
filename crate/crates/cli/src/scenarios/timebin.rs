//! A time-bin qubit through the ideal map and the solver, with the global
//! phase tracked over a grid of control-pulse phases.

use std::f64::consts::PI;

use crib_core::memory::{IdealMemory, SolverMemory};
use crib_core::timebin::{encode, memory_transform, TimeBinQubit, Transformed};
use rayon::prelude::*;

use super::{options, Outcome};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::report::table;

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

struct Errors {
    carried_r: f64,
    carried_phi: f64,
    canonical_r: f64,
    canonical_phi: f64,
    global_phase: f64,
}

fn errors(q: &TimeBinQubit<f64>, t: &Transformed<f64>, chi12: f64) -> Errors {
    let d = &t.diagnostics;
    let phase = |got: f64, want: f64| if d.phase_valid { wrap(got - want).abs() } else { 0.0 };
    Errors {
        carried_r: (d.carried_r - q.r).abs(),
        carried_phi: phase(d.carried_phi, q.phi),
        canonical_r: (t.qubit.r - (1.0 - q.r * q.r).sqrt()).abs(),
        canonical_phi: phase(t.qubit.phi, -q.phi),
        global_phase: wrap(d.global_phase + chi12).abs(),
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let sched_spec = cfg.schedule.as_ref().expect("checked by the schema");
    let q: TimeBinQubit<f64> = cfg.qubit.as_ref().expect("checked by the schema").build().map_err(CliError::schema)?;
    let input = encode(&q).map_err(CliError::schema)?;
    let medium = cfg.medium.as_ref().expect("checked by the schema").build::<f64>().map_err(CliError::schema)?;
    let schedule = sched_spec.build(input.t_end())?;
    let grid = cfg.xi_grid.clone().unwrap_or_default();
    let solver_at = |xi1: f64, xi2: f64| SolverMemory {
        medium: medium.clone(),
        schedule: schedule.with_phases(xi1, xi2),
        decoherence_rate: sched_spec.decoherence_rate,
        options: options(cfg, sched_spec),
    };

    let ideal = memory_transform(&q, &IdealMemory::from_schedule(&schedule))?;
    let solver = memory_transform(&q, &solver_at(schedule.xi1, schedule.xi2))?;
    let sweep = grid
        .par_iter()
        .map(|&[xi1, xi2]| {
            let memory = solver_at(xi1, xi2);
            let chi = memory.schedule.chi12();
            memory_transform(&q, &memory).map(|t| (xi1, xi2, chi, t))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let chi = schedule.chi12();
    let mut out = Outcome::default();
    let m = &mut out.metrics;
    m.set("chi12", chi);
    m.flag("phase_valid", ideal.diagnostics.phase_valid);
    for (tag, t) in [("ideal", &ideal), ("solver", &solver)] {
        let e = errors(&q, t, chi);
        m.set(format!("{tag}_carried_r_error"), e.carried_r);
        m.set(format!("{tag}_carried_phi_error"), e.carried_phi);
        m.set(format!("{tag}_canonical_r_error"), e.canonical_r);
        m.set(format!("{tag}_canonical_phi_error"), e.canonical_phi);
        m.set(format!("{tag}_global_phase_error"), e.global_phase);
        m.set(format!("{tag}_efficiency"), t.diagnostics.efficiency);
        m.set(format!("{tag}_bin_fidelity"), t.diagnostics.bin_fidelity);
    }
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (xi1, xi2, c, t) in &sweep {
        let e = errors(&q, t, *c);
        worst = worst.max(e.global_phase);
        rows.push(vec![*xi1, *xi2, *c, t.diagnostics.global_phase, e.global_phase, t.diagnostics.carried_r, t.diagnostics.carried_phi, t.diagnostics.efficiency]);
    }
    m.set("xi_grid_points", sweep.len() as f64);
    if !sweep.is_empty() {
        m.set("xi_grid_max_global_phase_error", worst);
    }
    out.artifacts.add(
        "xi_grid.csv",
        table(&["xi1", "xi2", "chi12", "global_phase", "global_phase_error", "carried_r", "carried_phi", "efficiency"], rows),
    );
    out.envelope("qubit_input.csv", &input);
    out.envelope("ideal_output.csv", &ideal.output);
    out.envelope("solver_output.csv", &solver.output);
    Ok(out)
}
