use crib_core::envelopes::*;
use crib_core::medium::{build_medium, AtomicMedium, CoherenceField, Profile, Transition};
use crib_core::schedule::ProtocolSchedule;
use crib_core::solver::*;
use crib_core::{Complex, Error};

struct Setup {
    input: SampledEnvelope<f64>,
    medium: AtomicMedium<f64>,
    schedule: ProtocolSchedule<f64>,
}

fn setup(d: f64, delta_omega: f64) -> Setup {
    let grid = pulse_grid(delta_omega, 0.0, 7.0, 0.1).unwrap();
    let input = make_gaussian(grid, delta_omega, 0.0, 0.0, 1.0).unwrap();
    let medium = build_medium(Profile::Gaussian, d, 60, 201, 6.0).unwrap();
    let t1 = input.t_end() + 5.0;
    let schedule = ProtocolSchedule::mirrored(t1, t1 + 5.0);
    Setup { input, medium, schedule }
}

fn run(s: &Setup) -> ProtocolReport<f64> {
    run_protocol(&s.input, &s.medium, &s.schedule, 0.0, &ProtocolOptions::default()).unwrap()
}

#[test]
fn closed_form_values() {
    assert_eq!(efficiency_law(0.0), 0.0);
    assert!((efficiency_law(1.0) - (1.0 - (-1.0f64).exp()).powi(2)).abs() < 1e-16);
    assert!(efficiency_law(30.0) > 1.0 - 1e-12);
}

#[test]
fn transmission_follows_beer_lambert_spectrum() {
    for d in [0.5, 2.0, 10.0] {
        let s = setup(d, 0.3);
        let forward = absorb(&s.input, &s.medium, Window::new(s.input.t_start() - 0.05, s.schedule.t1), &SolverConfig::default()).unwrap();
        let t = forward.field_out.energy() / s.input.energy();
        let law = spectral_transmission(&s.input, &s.medium).unwrap();
        assert!((t / law - 1.0).abs() < 1e-2, "d = {d}: {t} vs {law}");
    }
}

#[test]
fn forward_stage_conserves_energy() {
    let s = setup(5.0, 0.3);
    let forward = absorb(&s.input, &s.medium, Window::new(s.input.t_start() - 0.05, s.schedule.t1), &SolverConfig::default()).unwrap();
    assert!(forward.ledger.relative_imbalance() < 1e-12);
    assert!(forward.leaked_energy == 0.0);
    assert!((forward.coherence.excitation_norm() + forward.field_out.energy() - s.input.energy()).abs() < 1e-12);
    assert_eq!(forward.coherence.active(), Transition::Sigma13);
}

#[test]
fn efficiency_matches_spectral_law_at_low_depth() {
    for d in [1.0, 2.0] {
        let s = setup(d, 0.3);
        let r = run(&s);
        let law = spectral_efficiency(&s.input, &s.medium).unwrap();
        assert!((r.efficiency - law).abs() < 1e-3, "d = {d}: {} vs {law}", r.efficiency);
        assert!(r.max_relative_imbalance() < 1e-10);
    }
}

#[test]
fn deep_medium_returns_the_mirrored_pulse() {
    let s = setup(30.0, 0.3);
    let r = run(&s);
    assert!(r.efficiency > 0.999, "{}", r.efficiency);
    assert!(r.fidelity_vs_ideal > 0.9999);
    assert!(r.phase_vs_ideal.abs() < 1e-3);
    assert_eq!(r.best_shift, 0);
    assert!(r.max_relative_imbalance() < 1e-10);
    assert!(r.transmitted.energy() < 1e-9);
    let ledger: Vec<&str> = r.energy_ledger.iter().map(|e| e.stage.as_str()).collect();
    assert_eq!(ledger, ["absorb", "pulse1", "store", "pulse2", "retrieve"]);
}

#[test]
fn control_phases_set_the_echo_phase() {
    let base = setup(30.0, 0.3);
    let reference = run(&base);
    for (xi1, xi2, w32) in [(0.8, 0.0, 0.0), (0.0, -1.2, 0.0), (0.3, 0.4, 0.05)] {
        let mut s = setup(30.0, 0.3);
        s.schedule = s.schedule.with_phases(xi1, xi2).with_omega32(w32);
        s.medium = s.medium.clone().with_splittings(0.0, w32);
        let r = run(&s);
        let chi = r.chi12;
        assert!((chi - (xi1 - xi2 - w32 * (r.schedule.t2 - r.schedule.t1))).abs() < 1e-12);
        let rel = overlap(&reference.echo, &r.echo).unwrap() / reference.echo.energy();
        let expected = Complex::from_polar(1.0, -chi);
        assert!((rel - expected).norm() < 1e-6, "{rel} vs {expected}");
    }
}

#[test]
fn storage_decay_scales_efficiency() {
    let s = setup(10.0, 0.3);
    let gamma = 0.01;
    let lossless = run(&s);
    let lossy = run_protocol(&s.input, &s.medium, &s.schedule, gamma, &ProtocolOptions::default()).unwrap();
    let t = lossy.schedule.t2 - lossy.schedule.t1;
    assert!((lossy.efficiency / lossless.efficiency - (-2.0 * gamma * t).exp()).abs() < 1e-10);
    assert!(lossy.max_relative_imbalance() < 1e-10);
}

#[test]
fn without_inversion_nothing_rephases() {
    let s = setup(30.0, 0.3);
    let options = ProtocolOptions { invert: false, ..ProtocolOptions::default() };
    let r = run_protocol(&s.input, &s.medium, &s.schedule, 0.0, &options).unwrap();
    assert!(r.efficiency < 0.01, "{}", r.efficiency);
    assert!(r.max_relative_imbalance() < 1e-10);
}

#[test]
fn phase_mismatch_costs_efficiency() {
    let s = setup(10.0, 0.3);
    let clean = run(&s).efficiency;
    let mut m = setup(10.0, 0.3);
    m.medium = m.medium.clone().with_mismatch(6.0);
    let r = run(&m);
    assert!(r.efficiency < clean - 0.05, "{} vs {clean}", r.efficiency);
    assert!(r.max_relative_imbalance() < 1e-10);
}

#[test]
fn stage_preconditions() {
    let s = setup(5.0, 0.3);
    let cfg = SolverConfig::default();
    let forward = absorb(&s.input, &s.medium, Window::new(s.input.t_start() - 0.05, s.schedule.t1), &cfg).unwrap();
    assert!(absorb(&s.input, &s.medium.inverted(), Window::new(-30.0, 0.0), &cfg).is_err());
    assert!(matches!(
        control_pi_pulse(&forward.coherence, PulseIndex::Second, 0.0, 0.0, &s.medium),
        Err(Error::WrongTransition { .. })
    ));
    assert!(store(&forward.coherence, 1.0, 0.0).is_err());
    let c1 = control_pi_pulse(&forward.coherence, PulseIndex::First, 0.0, s.schedule.t1, &s.medium).unwrap();
    let c2 = store(&c1, 10.0, 0.0).unwrap();
    let c3 = control_pi_pulse(&c2, PulseIndex::Second, 0.0, s.schedule.t2, &s.medium).unwrap();
    let window = Window::new(s.schedule.t2, s.schedule.t2 + 60.0);
    assert!(matches!(retrieve(&c3, &s.medium, window, &cfg), Err(Error::NotInverted)));
    assert!(matches!(retrieve(&c3, &s.medium.inverted(), Window::new(s.schedule.t2 + 1.0, s.schedule.t2 + 60.0), &cfg), Err(Error::Schedule(_))));
    assert!(matches!(retrieve(&c3, &s.medium.inverted(), Window::new(s.schedule.t2, s.schedule.t2 + 20.0), &cfg), Err(Error::WindowOverflow(_))));
    let back = retrieve(&c3, &s.medium.inverted(), window, &cfg).unwrap();
    assert!(back.ledger.relative_imbalance() < 1e-12);
}

#[test]
fn truncated_absorption_window_is_reported() {
    let s = setup(5.0, 0.3);
    let err = absorb(&s.input, &s.medium, Window::new(0.0, s.schedule.t1), &SolverConfig::default()).unwrap_err();
    assert!(matches!(err, Error::WindowOverflow(_)));
}

#[test]
fn step_limits_are_enforced() {
    let s = setup(5.0, 0.3);
    let coarse = make_gaussian(pulse_grid(0.3, 0.0, 7.0, 0.5).unwrap(), 0.3, 0.0, 0.0, 1.0).unwrap();
    let r = run_protocol(&coarse, &s.medium, &s.schedule, 0.0, &ProtocolOptions::default());
    assert!(matches!(r, Err(Error::StepSize(_))));
    let thin = build_medium::<f64>(Profile::Gaussian, 30.0, 10, 201, 6.0).unwrap();
    let r = run_protocol(&s.input, &thin, &s.schedule, 0.0, &ProtocolOptions::default());
    assert!(matches!(r, Err(Error::StepSize(_))));
}

#[test]
fn schedule_must_mirror() {
    let s = setup(5.0, 0.3);
    let bad = ProtocolSchedule { t_inv: s.schedule.t_inv + 1.0, ..s.schedule };
    assert!(run_protocol(&s.input, &s.medium, &bad, 0.0, &ProtocolOptions::default()).is_err());
}

#[test]
fn single_precision_agrees() {
    let s = setup(5.0, 0.3);
    let r64 = run(&s);
    let grid = pulse_grid(0.3f32, 0.0, 7.0, 0.1).unwrap();
    let input = make_gaussian(grid, 0.3f32, 0.0, 0.0, 1.0).unwrap();
    let medium = build_medium(Profile::Gaussian, 5.0f32, 60, 201, 6.0).unwrap();
    let t1 = input.t_end() + 5.0;
    let r32 = run_protocol(&input, &medium, &ProtocolSchedule::mirrored(t1, t1 + 5.0), 0.0, &ProtocolOptions::default()).unwrap();
    assert!((r32.efficiency as f64 - r64.efficiency).abs() < 1e-3);
    assert!(r32.fidelity_vs_ideal > 0.999);
}

#[test]
fn coherence_field_starts_empty() {
    let m = build_medium::<f64>(Profile::Gaussian, 1.0, 8, 32, 6.0).unwrap();
    let c = CoherenceField::zeros(&m, Transition::Sigma13, 0.0, 0.1);
    assert_eq!(c.shape(), (8, 32));
    assert_eq!(c.excitation_norm(), 0.0);
}

#[test]
fn lorentzian_transmission_matches_its_spectrum() {
    let grid = pulse_grid(0.3, 0.0, 7.0, 0.1).unwrap();
    let input = make_gaussian(grid, 0.3, 0.0, 0.0, 1.0).unwrap();
    let medium = build_medium(Profile::Lorentzian, 2.0, 40, 801, 20.0).unwrap();
    let forward = absorb(&input, &medium, Window::new(input.t_start() - 0.05, input.t_end() + 5.0), &SolverConfig::default()).unwrap();
    let t = forward.field_out.energy() / input.energy();
    let law = spectral_transmission(&input, &medium).unwrap();
    assert!((t / law - 1.0).abs() < 1e-2, "{t} vs {law}");
}

#[test]
fn deep_medium_transmission() {
    let d: f64 = 10.0;
    let cfg = SolverConfig::default();
    // δω = 0.2: finite bandwidth lifts transmission above e^{-d}; compare to the transfer function.
    let input = make_gaussian(pulse_grid(0.2, 0.0, 7.0, 0.1).unwrap(), 0.2, 0.0, 0.0, 1.0).unwrap();
    // The z error of the transmitted tail is second order in d/nz; 80 cells keep it below 0.5%.
    let medium = build_medium(Profile::Gaussian, d, 80, 601, 6.0).unwrap();
    let forward = absorb(&input, &medium, Window::new(input.t_start() - 0.05, input.t_end() + 5.0), &cfg).unwrap();
    let t = forward.field_out.energy() / input.energy();
    let law = spectral_transmission(&input, &medium).unwrap();
    assert!((t / law - 1.0).abs() < 0.01, "{t} vs {law}");
    assert!(law / (-d).exp() > 1.05);
    // δω = 0.05 is close to the monochromatic limit.
    let input = make_gaussian(pulse_grid(0.05, 0.0, 7.0, 0.2).unwrap(), 0.05, 0.0, 0.0, 1.0).unwrap();
    let forward = absorb(&input, &medium, Window::new(input.t_start() - 0.1, input.t_end() + 5.0), &cfg).unwrap();
    let t = forward.field_out.energy() / input.energy();
    assert!((t / (-d).exp() - 1.0).abs() < 0.01, "{}", t / (-d).exp());
}
