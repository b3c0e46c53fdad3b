//! Randomized multi-packet inputs through the ideal map, checked against
//! the closed-form time-reversed packet sum.

use std::f64::consts::PI;

use crib_core::envelopes::{fidelity, SampledEnvelope, TimeGrid};
use crib_core::ideal_map::ideal_retrieve_envelope;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Outcome;
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::report::table;

#[derive(Clone, Copy, Debug)]
struct Packet {
    c: Complex<f64>,
    center: f64,
    delta_omega: f64,
    detuning: f64,
}

impl Packet {
    fn at(&self, t: f64) -> Complex<f64> {
        let x = (t - self.center) * self.delta_omega;
        let g = (self.delta_omega / PI.sqrt()).sqrt() * (-0.5 * x * x).exp();
        self.c * g * Complex::from_polar(1.0, self.detuning * (t - self.center))
    }
}

struct Trial {
    packets: Vec<Packet>,
    chi12: f64,
    t_prime: f64,
    grid: TimeGrid<f64>,
}

fn draw(rng: &mut ChaCha8Rng, max_packets: usize, dt: f64) -> Result<Trial, CliError> {
    let n = rng.random_range(2..=max_packets);
    let mut packets = Vec::with_capacity(n);
    let mut center = 0.0;
    for _ in 0..n {
        let delta_omega = rng.random_range(0.5..2.0);
        let c = Complex::from_polar(rng.random_range(0.2..1.0), rng.random_range(-PI..PI));
        packets.push(Packet { c, center, delta_omega, detuning: rng.random_range(-1.0..1.0) });
        center += rng.random_range(1.0..8.0);
    }
    let from = packets.iter().map(|p| p.center - 8.0 / p.delta_omega).fold(f64::INFINITY, f64::min);
    let to = packets.iter().map(|p| p.center + 8.0 / p.delta_omega).fold(f64::NEG_INFINITY, f64::max);
    let grid = TimeGrid::spanning(from, to, dt).map_err(CliError::schema)?;
    let chi12 = rng.random_range(-PI..PI);
    let t_prime = grid.t_end() + rng.random_range(5.0..50.0);
    Ok(Trial { packets, chi12, t_prime, grid })
}

pub fn run(cfg: &ScenarioConfig) -> Result<Outcome, CliError> {
    let spec = cfg.trials.as_ref().expect("checked by the schema");
    if spec.count == 0 || spec.max_packets < 2 {
        return Err(CliError::Schema("trials.count must be positive and trials.max_packets at least 2".into()));
    }
    if !(spec.dt > 0.0 && spec.dt <= 0.2) {
        return Err(CliError::Schema("trials.dt must lie in (0, 0.2] to resolve the packets".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trials: Vec<Trial> = (0..spec.count).map(|_| draw(&mut rng, spec.max_packets, spec.dt)).collect::<Result<_, _>>()?;

    let mut out = Outcome::default();
    let mut rows = Vec::with_capacity(trials.len());
    let (mut min_fid, mut max_energy, mut max_sample) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (k, trial) in trials.iter().enumerate() {
        let raw = SampledEnvelope::from_fn(trial.grid, |t| trial.packets.iter().map(|p| p.at(t)).sum())?;
        let norm = raw.energy().sqrt();
        let input = raw.scaled(Complex::new(1.0 / norm, 0.0));
        let output = ideal_retrieve_envelope(&input, trial.chi12, trial.t_prime);

        // E_out(t) = e^{-iχ} E_in(t₀ + t′ − t)
        let reflect = input.t_start() + trial.t_prime;
        let phase = Complex::from_polar(1.0 / norm, -trial.chi12);
        let expected =
            SampledEnvelope::from_fn(output.grid(), |t| phase * trial.packets.iter().map(|p| p.at(reflect - t)).sum::<Complex<f64>>())?;

        let fid = fidelity(&output, &expected)?;
        let energy_error = (output.energy() - input.energy()).abs();
        let sample_error =
            output.samples().iter().zip(expected.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        min_fid = min_fid.min(fid);
        max_energy = max_energy.max(energy_error);
        max_sample = max_sample.max(sample_error);
        rows.push(vec![
            k as f64,
            trial.packets.len() as f64,
            trial.chi12,
            trial.t_prime,
            fid,
            energy_error,
            sample_error,
        ]);
        if k == 0 {
            out.envelope("trial0_input.csv", &input);
            out.envelope("trial0_output.csv", &output);
        }
    }
    out.metrics.set("trials", trials.len() as f64);
    out.metrics.set("min_fidelity", min_fid);
    out.metrics.set("max_energy_error", max_energy);
    out.metrics.set("max_sample_error", max_sample);
    out.artifacts.add(
        "trials.csv",
        table(&["trial", "packets", "chi12", "t_prime", "fidelity", "energy_error", "max_sample_error"], rows),
    );
    Ok(out)
}
