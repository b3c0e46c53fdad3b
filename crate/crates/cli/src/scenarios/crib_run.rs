//! A single CRIB cycle through the solver, with optional negative controls.

use std::f64::consts::PI;

use crib_core::envelopes::{make_gaussian, SampledEnvelope, TimeGrid};
use crib_core::interferometer::{fringe_period, fringe_sweep, visibility};
use crib_core::memory::PlainDelay;
use crib_core::solver::{efficiency_law, run_protocol, spectral_efficiency, ProtocolOptions, ProtocolReport};
use crib_core::timebin::decode;
use num_complex::Complex;

use super::{options, Outcome};
use crate::config::{InputSpec, ScenarioConfig};
use crate::error::CliError;
use crate::report::table;

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Two-packet input seen through the output bins.
struct PacketCheck {
    /// Expected (early, late) output amplitudes up to the overall efficiency.
    expected: [Complex<f64>; 2],
    tau: f64,
    bin: SampledEnvelope<f64>,
}

impl PacketCheck {
    fn new(spec: &InputSpec, pivot: f64, chi12: f64) -> Result<Option<Self>, CliError> {
        let InputSpec::DoublePacket { alpha, beta, tau, phi1, phi2, delta_omega, t_center, dt, .. } = *spec else {
            return Ok(None);
        };
        let alpha = Complex::new(alpha[0], alpha[1]) * Complex::from_polar(1.0, phi1 - chi12);
        let beta = Complex::new(beta[0], beta[1]) * Complex::from_polar(1.0, phi2 - chi12);
        // The late input packet comes out first.
        let early = 2.0 * pivot - t_center - tau;
        let half = 8.0 / delta_omega;
        let grid = TimeGrid::spanning(early - half, early + half, dt).map_err(CliError::schema)?;
        let bin = make_gaussian(grid, delta_omega, early, 0.0, 1.0).map_err(CliError::schema)?;
        Ok(Some(Self { expected: [beta, alpha], tau, bin }))
    }

    /// Largest relative amplitude and absolute phase errors of the two packets.
    fn errors(&self, env: &SampledEnvelope<f64>) -> Result<(f64, f64), CliError> {
        let d = decode(env, self.tau, &self.bin)?;
        let got = [Complex::new(d.amplitudes[0][0], d.amplitudes[0][1]), Complex::new(d.amplitudes[1][0], d.amplitudes[1][1])];
        let norm_got = (got[0].norm_sqr() + got[1].norm_sqr()).sqrt();
        let norm_exp = (self.expected[0].norm_sqr() + self.expected[1].norm_sqr()).sqrt();
        let mut amp = 0.0f64;
        let mut phase = 0.0f64;
        for (g, e) in got.iter().zip(&self.expected) {
            amp = amp.max(((g.norm() / norm_got) - (e.norm() / norm_exp)).abs() / (e.norm() / norm_exp));
            phase = phase.max(wrap(g.arg() - e.arg()).abs());
        }
        Ok((amp, phase))
    }
}

fn ledger_csv(report: &ProtocolReport<f64>) -> String {
    let mut out = String::from("stage,field_in,field_out,coherence_in,coherence,leaked,imbalance\n");
    for e in &report.energy_ledger {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            e.stage,
            e.field_in,
            e.field_out,
            e.coherence_in,
            e.coherence,
            e.leaked,
            e.imbalance()
        ));
    }
    out
}

pub fn run(cfg: &ScenarioConfig, base: &std::path::Path) -> Result<Outcome, CliError> {
    let input_spec = cfg.input.as_ref().expect("checked by the schema");
    let sched_spec = cfg.schedule.as_ref().expect("checked by the schema");
    let medium_spec = cfg.medium.as_ref().expect("checked by the schema");
    let input = input_spec.build(base)?;
    let medium = medium_spec.build::<f64>().map_err(CliError::schema)?;
    let schedule = sched_spec.build(input.t_end())?;
    let controls = cfg.controls.clone().unwrap_or_default();
    let plain = match &controls.plain_delay {
        Some(mz) => Some((mz.build()?, mz.alphas())),
        None => None,
    };
    let opts = options(cfg, sched_spec);

    let report = run_protocol(&input, &medium, &schedule, sched_spec.decoherence_rate, &opts)?;
    let mut out = Outcome::default();
    let m = &mut out.metrics;
    m.set("efficiency", report.efficiency);
    m.set("fidelity_vs_ideal", report.fidelity_vs_ideal);
    m.set("phase_vs_ideal", report.phase_vs_ideal);
    m.set("best_shift_fidelity", report.best_shift_fidelity);
    m.set("best_shift", report.best_shift as f64);
    m.set("chi12", report.chi12);
    m.set("t1", report.schedule.t1);
    m.set("t2", report.schedule.t2);
    m.set("max_ledger_imbalance", report.max_relative_imbalance());
    m.set("transmitted_fraction", report.transmitted.energy() / input.energy());
    m.set("residual_coherence", report.residual_coherence);
    m.set("efficiency_closed_form", efficiency_law(medium_spec.d));
    if let Ok(s) = spectral_efficiency(&input, &medium) {
        m.set("efficiency_spectral", s);
    }
    m.set("forward_rotation", report.forward_steps.rotation);
    m.set("forward_cell_depth", report.forward_steps.cell_depth);
    m.set("max_truncation_estimate", report.forward_steps.max_truncation_estimate.max(report.backward_steps.max_truncation_estimate));

    if let Some(check) = PacketCheck::new(input_spec, report.schedule.pivot(), report.chi12)? {
        let (a, p) = check.errors(&report.ideal)?;
        m.set("packet_amplitude_error_ideal", a);
        m.set("packet_phase_error_ideal", p);
        let (a, p) = check.errors(&report.echo)?;
        m.set("packet_amplitude_error", a);
        m.set("packet_phase_error", p);
    }

    if controls.no_inversion {
        let flat = ProtocolOptions { invert: false, ..opts };
        let r = run_protocol(&input, &medium, &schedule, sched_spec.decoherence_rate, &flat)?;
        out.metrics.set("efficiency_no_inversion", r.efficiency);
        out.envelope("echo_no_inversion.csv", &r.echo);
    }
    if let Some((mz, alphas)) = plain {
        let delay = PlainDelay { delay: schedule.storage_time() };
        let points = fringe_sweep(&input, &mz, &delay, &alphas)?;
        let max = points.iter().map(|p| p.i_central).fold(f64::MIN, f64::max);
        let min = points.iter().map(|p| p.i_central).fold(f64::MAX, f64::min);
        out.metrics.set("plain_delay_visibility", visibility(&points));
        out.metrics.set("plain_delay_central_mean", points.iter().map(|p| p.i_central).sum::<f64>() / points.len() as f64);
        out.metrics.set("plain_delay_central_spread", max - min);
        out.metrics.flag("plain_delay_has_period", fringe_period(&points).is_some());
        out.artifacts.add(
            "plain_delay_fringe.csv",
            table(&["alpha", "i_early", "i_central", "i_late"], points.iter().map(|p| vec![p.alpha, p.i_early, p.i_central, p.i_late])),
        );
    }

    out.envelope("input.csv", &input);
    out.envelope("echo.csv", &report.echo);
    out.envelope("ideal.csv", &report.ideal);
    out.envelope("transmitted.csv", &report.transmitted);
    out.artifacts.add("ledger.csv", ledger_csv(&report));
    Ok(out)
}
