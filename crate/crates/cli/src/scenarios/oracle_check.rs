//! Solver against the brute-force oracle on the same atoms, optionally with
//! the stage-propagator reversal check.

use crib_core::envelopes::fidelity;

use super::{compare_with_oracle, half_width, Outcome, PreparedReversal};
use crate::config::ScenarioConfig;
use crate::error::CliError;

pub fn run(cfg: &ScenarioConfig, base: &std::path::Path) -> Result<Outcome, CliError> {
    let oracle = cfg.oracle.as_ref().expect("checked by the schema");
    let sched_spec = cfg.schedule.as_ref().expect("checked by the schema");
    let input_spec = cfg.input.as_ref().expect("checked by the schema");
    let input = input_spec.build(base)?;
    let schedule = sched_spec.build(input.t_end())?;
    let hw = half_width(oracle.mode_half_width, input_spec)?;
    oracle.ensemble.atoms().map_err(CliError::schema)?;
    let reversal = cfg.reversal.as_ref().map(|r| PreparedReversal::new(r, base)).transpose()?;

    let c = compare_with_oracle(&oracle.ensemble, &input, &schedule, hw, cfg.solver.unwrap_or_default(), sched_spec.echo_tail)?;
    let mut out = Outcome::default();
    let m = &mut out.metrics;
    m.set("atoms", c.atoms as f64);
    m.set("modes", c.modes as f64);
    m.set("oracle_efficiency", c.oracle.efficiency);
    m.set("solver_efficiency", c.solver.efficiency);
    m.set("efficiency_difference", (c.oracle.efficiency - c.solver.efficiency).abs());
    m.set("oracle_solver_fidelity", fidelity(&c.oracle.echo, &c.solver.echo)?);
    m.set("oracle_ideal_fidelity", fidelity(&c.oracle.echo, &c.solver.ideal)?);
    m.set("solver_ideal_fidelity", c.solver.fidelity_vs_ideal);
    m.set("oracle_norm_error", c.oracle.max_norm_error);
    m.set("oracle_transmitted", c.oracle.transmitted);
    m.set("oracle_spin_remainder", c.oracle.spin_remainder);
    m.set("solver_max_ledger_imbalance", c.solver.max_relative_imbalance());
    out.envelope("oracle_echo.csv", &c.oracle.echo);
    out.envelope("solver_echo.csv", &c.solver.echo);
    if let Some(r) = reversal {
        r.run(&mut out)?;
    }
    Ok(out)
}
