//! Double-pass Mach–Zehnder around a memory: fringe sweep over `α` and the
//! single-path blocking configurations.

use std::f64::consts::FRAC_PI_2;

use crib_core::interferometer::{double_pass, double_pass_blocked, fringe_period, fringe_sweep, visibility, Arm, ArmBlock};
use crib_core::memory::{IdealMemory, MemoryBackend, PlainDelay, SolverMemory};
use num_complex::Complex;

use super::{options, Outcome};
use crate::config::{Backend, ScenarioConfig};
use crate::error::CliError;
use crate::report::table;

/// Blocks that leave only the path through `arm` on both passes.
fn only(arm: Arm) -> [ArmBlock; 2] {
    let other = match arm {
        Arm::Short => Arm::Long,
        Arm::Long => Arm::Short,
    };
    [ArmBlock { pass: 1, arm: other }, ArmBlock { pass: 2, arm: other }]
}

fn sorted(labels: &[&'static str]) -> Vec<&'static str> {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v
}

pub fn run(cfg: &ScenarioConfig, base: &std::path::Path) -> Result<Outcome, CliError> {
    let spec = cfg.mz.as_ref().expect("checked by the schema");
    let sched_spec = cfg.schedule.as_ref().expect("checked by the schema");
    let pulse = cfg.input.as_ref().expect("checked by the schema").build(base)?;
    let mz = spec.build()?;
    // The memory sees the pulse on a grid extended by ΔL.
    let schedule = sched_spec.build(pulse.t_end() + spec.delta_l)?;
    let backend: Box<dyn MemoryBackend<f64>> = match spec.backend {
        Backend::Ideal => Box::new(IdealMemory::from_schedule(&schedule)),
        Backend::PlainDelay => Box::new(PlainDelay { delay: schedule.storage_time() }),
        Backend::Solver => Box::new(SolverMemory {
            medium: cfg.medium.as_ref().expect("checked by the schema").build::<f64>().map_err(CliError::schema)?,
            schedule,
            decoherence_rate: sched_spec.decoherence_rate,
            options: options(cfg, sched_spec),
        }),
    };
    let alphas = spec.alphas();

    let points = fringe_sweep(&pulse, &mz, backend.as_ref(), &alphas)?;
    let at_zero = double_pass(&pulse, &mz, backend.as_ref())?;

    let mut out = Outcome::default();
    let m = &mut out.metrics;
    let central: Vec<f64> = points.iter().map(|p| p.i_central).collect();
    let max = central.iter().copied().fold(f64::MIN, f64::max);
    let min = central.iter().copied().fold(f64::MAX, f64::min);
    m.set("memory_efficiency", at_zero.memory_efficiency);
    m.set("visibility", visibility(&points));
    m.set("fringe_period", fringe_period(&points).unwrap_or(f64::NAN));
    m.set("i_central_max", max);
    m.set("i_central_min", min);
    m.set("i_central_spread", max - min);
    m.set("i_early", at_zero.i_early);
    m.set("i_late", at_zero.i_late);
    m.set("i_central_alpha0", at_zero.i_central);
    if spec.alpha_points.is_multiple_of(4) {
        let quarter = &points[spec.alpha_points / 4];
        debug_assert!((quarter.alpha - FRAC_PI_2).abs() < 1e-12);
        m.set("null_ratio", quarter.i_central / points[0].i_central);
    }
    m.set("unused_energy", at_zero.unused.0 + at_zero.unused.1);
    let composition: Vec<Vec<&str>> = at_zero.composition.iter().map(|c| sorted(c)).collect();
    m.flag("central_is_ss_ll", composition[1] == ["ll", "ss"]);
    m.flag("central_is_sl_ls", composition[1] == ["ls", "sl"]);

    if spec.blocking {
        let probe = mz.with_alpha(0.7).map_err(CliError::runtime)?;
        let full = double_pass(&pulse, &probe, backend.as_ref())?;
        let ss = double_pass_blocked(&pulse, &probe, backend.as_ref(), &only(Arm::Short))?;
        let ll = double_pass_blocked(&pulse, &probe, backend.as_ref(), &only(Arm::Long))?;
        let m = &mut out.metrics;
        m.flag("blocked_ss_central", ss.composition[1] == ["ss"] && ss.composition[0].is_empty() && ss.composition[2].is_empty());
        m.flag("blocked_ll_central", ll.composition[1] == ["ll"] && ll.composition[0].is_empty() && ll.composition[2].is_empty());
        let paths = ss.central.add(&ll.central)?;
        let residual = full.central.add(&paths.scaled(Complex::new(-1.0, 0.0)))?;
        m.set("blocking_superposition_error", residual.energy() / full.central.energy());
        // Relative phase of the two central contributions; 2α for a reversing memory.
        let phase = crib_core::envelopes::overlap(&ss.central, &ll.central)?.arg();
        m.set("blocking_relative_phase", phase);
        out.envelope("central_ss.csv", &ss.central);
        out.envelope("central_ll.csv", &ll.central);
    }

    let labels: Vec<String> = composition.iter().map(|c| c.join("+")).collect();
    out.artifacts.add(
        "composition.json",
        serde_json::to_string_pretty(&serde_json::json!({ "early": labels[0], "central": labels[1], "late": labels[2] }))
            .expect("plain strings serialize"),
    );
    out.artifacts.add(
        "fringe.csv",
        table(&["alpha", "i_early", "i_central", "i_late"], points.iter().map(|p| vec![p.alpha, p.i_early, p.i_central, p.i_late])),
    );
    out.envelope("output_alpha0.csv", &at_zero.output);
    Ok(out)
}
