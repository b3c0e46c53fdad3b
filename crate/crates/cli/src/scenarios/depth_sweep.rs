//! Efficiency and fidelity against optical depth, with an optional oracle
//! check of the efficiency law at low depth.

use crib_core::medium::{build_medium, MediumSpec, Profile};
use crib_core::solver::{efficiency_law, run_protocol, spectral_efficiency};
use rayon::prelude::*;

use super::{compare_with_oracle, fmt_depth, half_width, options, Outcome};
use crate::config::{ScenarioConfig, ScheduleSpec};
use crate::error::CliError;
use crate::report::table;

/// Oracle runs default to a short storage so the mode box stays small.
fn oracle_schedule() -> ScheduleSpec {
    ScheduleSpec {
        t1: None,
        delay: 4.0,
        storage: 6.0,
        xi1: 0.0,
        xi2: 0.0,
        omega32: 0.0,
        decoherence_rate: 0.0,
        echo_tail: 0.0,
    }
}

fn check_depths(name: &str, depths: &[f64]) -> Result<(), CliError> {
    if depths.is_empty() || depths.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(CliError::Schema(format!("{name} must be a non-empty list of positive depths")));
    }
    Ok(())
}

pub fn run(cfg: &ScenarioConfig, base: &std::path::Path) -> Result<Outcome, CliError> {
    let sched_spec = cfg.schedule.as_ref().expect("checked by the schema");
    let depths = &cfg.sweep.as_ref().expect("checked by the schema").depths;
    check_depths("sweep.depths", depths)?;
    let input = cfg.input.as_ref().expect("checked by the schema").build(base)?;
    let schedule = sched_spec.build(input.t_end())?;
    let media = depths
        .iter()
        .map(|&d| MediumSpec { d, ..cfg.medium.clone().expect("checked by the schema") }.build::<f64>().map_err(CliError::schema))
        .collect::<Result<Vec<_>, _>>()?;
    let oracle = match &cfg.oracle {
        Some(o) => {
            let o_depths = o.depths.clone().expect("checked by the schema");
            check_depths("oracle.depths", &o_depths)?;
            let o_input_spec = o.input.as_ref().expect("checked by the schema");
            let o_input = o_input_spec.build(base)?;
            let o_sched_spec = o.schedule.clone().unwrap_or_else(oracle_schedule);
            let o_schedule = o_sched_spec.build(o_input.t_end())?;
            let hw = half_width(o.mode_half_width, o_input_spec)?;
            for &d in &o_depths {
                crib_core::oracle::EnsembleSpec { d, ..o.ensemble.clone() }.atoms().map_err(CliError::schema)?;
            }
            Some((o, o_depths, o_input, o_sched_spec, o_schedule, hw))
        }
        None => None,
    };
    let opts = options(cfg, sched_spec);

    let runs = media
        .par_iter()
        .map(|medium| run_protocol(&input, medium, &schedule, sched_spec.decoherence_rate, &opts))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let (mut closed, mut spectral, mut imbalance) = (0.0f64, 0.0f64, 0.0f64);
    for ((&d, medium), r) in depths.iter().zip(&media).zip(&runs) {
        let law = efficiency_law(d);
        let spec_law = spectral_efficiency(&input, medium).unwrap_or(f64::NAN);
        closed = closed.max((r.efficiency - law).abs() / law);
        spectral = spectral.max((r.efficiency - spec_law).abs() / spec_law);
        imbalance = imbalance.max(r.max_relative_imbalance());
        let tag = fmt_depth(d);
        out.metrics.set(format!("efficiency_d{tag}"), r.efficiency);
        out.metrics.set(format!("fidelity_d{tag}"), r.fidelity_vs_ideal);
        rows.push(vec![d, r.efficiency, r.fidelity_vs_ideal, r.phase_vs_ideal, law, spec_law, r.max_relative_imbalance()]);
    }
    // Sorted by depth so the monotonicity flags do not depend on list order.
    let mut order: Vec<usize> = (0..depths.len()).collect();
    order.sort_by(|&a, &b| depths[a].total_cmp(&depths[b]));
    let eff: Vec<f64> = order.iter().map(|&i| runs[i].efficiency).collect();
    let fid: Vec<f64> = order.iter().map(|&i| runs[i].fidelity_vs_ideal).collect();
    let last = *order.last().unwrap();
    let m = &mut out.metrics;
    m.flag("efficiency_monotone", eff.windows(2).all(|w| w[1] >= w[0]));
    m.flag("fidelity_monotone", fid.windows(2).all(|w| w[1] >= w[0]));
    m.set("max_depth", depths[last]);
    m.set("efficiency_max_depth", runs[last].efficiency);
    m.set("fidelity_max_depth", runs[last].fidelity_vs_ideal);
    m.set("max_closed_form_deviation", closed);
    m.set("max_spectral_deviation", spectral);
    m.set("max_ledger_imbalance", imbalance);
    out.artifacts.add(
        "sweep.csv",
        table(&["d", "efficiency", "fidelity", "phase", "closed_form", "spectral_form", "ledger_imbalance"], rows),
    );

    if let Some((o, o_depths, o_input, o_sched_spec, o_schedule, hw)) = oracle {
        let solver = cfg.solver.unwrap_or_default();
        let comparisons = o_depths
            .iter()
            .map(|&d| {
                let ens = crib_core::oracle::EnsembleSpec { d, ..o.ensemble.clone() };
                compare_with_oracle(&ens, &o_input, &o_schedule, hw, solver, o_sched_spec.echo_tail).map(|c| (d, ens, c))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut rows = Vec::new();
        let (mut law_dev, mut solver_dev, mut norm) = (0.0f64, 0.0f64, 0.0f64);
        for (d, ens, c) in &comparisons {
            // The law uses the analytic line the atoms were drawn from.
            let span = if ens.profile == Profile::Lorentzian { 40.0 } else { 8.0 };
            let line = build_medium::<f64>(ens.profile, *d, 4, 101, span)?;
            let spec_law = spectral_efficiency(&o_input, &line)?;
            let eta = c.oracle.efficiency;
            law_dev = law_dev.max((eta - spec_law).abs() / spec_law);
            solver_dev = solver_dev.max((eta - c.solver.efficiency).abs());
            norm = norm.max(c.oracle.max_norm_error);
            out.metrics.set(format!("oracle_efficiency_d{}", fmt_depth(*d)), eta);
            rows.push(vec![*d, eta, c.solver.efficiency, spec_law, efficiency_law(*d), c.oracle.max_norm_error]);
        }
        out.metrics.set("oracle_max_law_deviation", law_dev);
        out.metrics.set("oracle_max_solver_difference", solver_dev);
        out.metrics.set("oracle_max_norm_error", norm);
        out.artifacts.add(
            "oracle_law.csv",
            table(&["d", "oracle_efficiency", "solver_efficiency", "spectral_form", "closed_form", "max_norm_error"], rows),
        );
    }
    Ok(out)
}
