use crib_core::envelopes::*;
use crib_core::medium::Profile;
use crib_core::oracle::*;
use crib_core::schedule::ProtocolSchedule;
use crib_core::solver::*;
use crib_core::Error;

fn spec(n_slices: usize, nodes: usize, length: f64, d: f64) -> EnsembleSpec {
    EnsembleSpec { n_slices, nodes_per_slice: nodes, length, d, profile: Profile::Gaussian, sampling: Sampling::Stratified, seed: 0 }
}

#[test]
fn stratified_nodes_are_symmetric_quantiles() {
    let s = spec(3, 8, 1.0, 1.0);
    let nodes = s.stratified_nodes();
    assert_eq!(nodes.len(), 8);
    for k in 0..4 {
        assert!((nodes[k] + nodes[7 - k]).abs() < 1e-12);
    }
    // Median of the upper half of a unit normal sits near 0.6745 (the 75% quantile).
    let atoms = s.atoms().unwrap();
    assert_eq!(atoms.len(), 24);
    assert!((atoms[0].0 - 1.0 / 6.0).abs() < 1e-15);
    assert!((atoms[23].0 - 5.0 / 6.0).abs() < 1e-15);
    let lorentz = EnsembleSpec { profile: Profile::Lorentzian, ..spec(1, 4, 1.0, 1.0) };
    // Cauchy quantiles at 1/8 and 3/8: tan(π(q − ½)).
    let n = lorentz.stratified_nodes();
    assert!((n[0] - (std::f64::consts::PI * (0.125 - 0.5)).tan()).abs() < 1e-9);
    assert!((n[1] - (std::f64::consts::PI * (0.375 - 0.5)).tan()).abs() < 1e-9);
}

#[test]
fn random_sampling_is_seeded() {
    let s = EnsembleSpec { sampling: Sampling::Random, seed: 7, ..spec(2, 5, 1.0, 1.0) };
    assert_eq!(s.atoms().unwrap(), s.atoms().unwrap());
    let other = EnsembleSpec { seed: 8, ..s.clone() };
    assert_ne!(s.atoms().unwrap(), other.atoms().unwrap());
    assert!(s.solver_medium::<f64>().is_err());
}

#[test]
fn spec_limits() {
    assert!(matches!(spec(41, 10, 1.0, 1.0).atoms(), Err(Error::SizeLimit(_))));
    assert!(spec(0, 10, 1.0, 1.0).atoms().is_err());
    assert!(EnsembleSpec { profile: Profile::Custom, ..spec(2, 2, 1.0, 1.0) }.atoms().is_err());
    let s = spec(2, 5, 1.0, 1.0);
    assert!(matches!(DiscreteSystem::<f64>::new(&s, 100.0, 100.0, 0.0, 0.1), Err(Error::SizeLimit(_))));
}

#[test]
fn couplings_add_up_to_beta() {
    let s = spec(5, 12, 2.0, 4.0);
    let beta = 4.0 / (std::f64::consts::TAU * Profile::Gaussian.density(0.0));
    let total = s.atom_coupling().powi(2) * s.n_atoms() as f64;
    assert!((total - beta).abs() < 1e-12);
    let m = s.solver_medium::<f64>().unwrap();
    assert!((m.coupling().powi(2) * m.length() - beta).abs() < 1e-12);
}

#[test]
fn loaded_pulse_is_reproduced_by_the_modes() {
    let grid = pulse_grid(0.5, 0.0, 7.0, 0.1).unwrap();
    let input = make_gaussian(grid, 0.5, 0.0, 0.0, 1.0).unwrap();
    let mut sys = DiscreteSystem::<f64>::new(&spec(2, 2, 1.0, 1.0), mode_half_width(0.5), 40.0, input.t_start() - 0.05, 0.1).unwrap();
    sys.load_input(&input);
    assert!((sys.norm_sqr() - 1.0).abs() < 1e-6);
    // At the load time the field at z = −(t − t_start) reproduces the pulse.
    for t in [-3.0, 0.0, 2.0] {
        let z = sys.t_start - t;
        assert!((sys.field_at(z) - input.value_at(t)).norm() < 1e-6, "t = {t}");
    }
}

#[test]
fn hamiltonian_is_hermitian() {
    let mut sys = DiscreteSystem::<f64>::new(&spec(2, 3, 1.0, 2.0), 2.0, 12.0, 0.0, 0.1).unwrap();
    sys.state[0] = crib_core::Complex::new(1.0, 0.0);
    let h = sys.hamiltonian(1.0, &sys.atom_detunings);
    let diff = h.sub(&h.adjoint());
    assert!(diff.frobenius() < 1e-15);
}

#[test]
fn oracle_agrees_with_solver_on_a_small_ensemble() {
    let dw = 0.5;
    let dt: f64 = 0.1;
    let grid = pulse_grid(dw, 0.0, 7.0, dt).unwrap();
    let input = make_gaussian(grid, dw, 0.0, 0.0, 1.0).unwrap();
    let s = spec(5, 12, 2.0, 2.0);
    let medium = s.solver_medium::<f64>().unwrap();
    let u0 = input.t_start() - dt / 2.0;
    let t1 = u0 + ((input.t_end() + 4.0 - u0) / dt).round() * dt;
    let schedule = ProtocolSchedule::mirrored(t1, t1 + 3.0);
    let mut options = ProtocolOptions::default();
    options.solver.edge_tolerance = 1.0;
    let r = run_protocol(&input, &medium, &schedule, 0.0, &options).unwrap();
    let echo_duration = r.echo.len() as f64 * dt;
    let lbox = box_length_for(&input, &schedule, u0, 2.0, echo_duration);
    let mut sys = DiscreteSystem::new(&s, mode_half_width(dw), lbox, u0, dt).unwrap();
    sys.load_input(&input);
    let o = evolve(&sys, &schedule, echo_duration).unwrap();
    assert!(o.max_norm_error < 1e-10);
    assert!((o.efficiency - r.efficiency).abs() < 0.01, "{} vs {}", o.efficiency, r.efficiency);
    assert!(fidelity(&o.echo, &r.echo).unwrap() > 0.99);
    let ledger = o.efficiency * o.input_energy + o.transmitted + o.spin_remainder;
    assert!(ledger <= o.input_energy + 1e-9);
}

#[test]
fn events_off_the_step_grid_are_rejected() {
    let grid = pulse_grid(0.5, 0.0, 7.0, 0.1).unwrap();
    let input = make_gaussian(grid, 0.5, 0.0, 0.0, 1.0).unwrap();
    let mut sys = DiscreteSystem::new(&spec(2, 2, 1.0, 1.0), mode_half_width(0.5), 60.0, input.t_start() - 0.05, 0.1).unwrap();
    sys.load_input(&input);
    let t1 = input.t_end() + 4.0 + 0.0123;
    let r = evolve(&sys, &ProtocolSchedule::mirrored(t1, t1 + 3.0), 20.0);
    assert!(matches!(r, Err(Error::Schedule(_))));
}

fn reversal_system() -> DiscreteSystem<f64> {
    let grid = TimeGrid::new(-7.0, 0.05, 281).unwrap();
    let input = make_gaussian(grid, 1.0, 0.0, 0.0, 1.0).unwrap();
    let mut sys = DiscreteSystem::<f64>::new(&spec(2, 5, 1.0, 3.0), mode_half_width(1.0), 16.0, -2.0, 0.1).unwrap();
    sys.load_input(&input);
    sys
}

#[test]
fn static_mirrored_stages_cancel_exactly() {
    let sys = reversal_system();
    let s = ProtocolSchedule::mirrored(4.0, 6.0);
    let r = verify_reversal_identity(&sys, &s, DetuningDrive { amplitude: 0.0, frequency: 0.0 }, 16).unwrap();
    assert!(r.mirrored);
    assert!(r.deviation < 1e-10, "{}", r.deviation);
    assert!(r.max_norm_error < 1e-10);
}

#[test]
fn driven_reversal_converges_and_broken_mirror_does_not() {
    let sys = reversal_system();
    let s = ProtocolSchedule::mirrored(4.0, 6.0);
    let drive = DetuningDrive { amplitude: 0.5, frequency: 0.8 };
    let reports: Vec<_> = [16, 32, 64].iter().map(|&m| verify_reversal_identity(&sys, &s, drive, m).unwrap()).collect();
    assert!(reports.windows(2).all(|w| w[1].deviation < w[0].deviation));
    let order = convergence_order(&reports).unwrap();
    assert!(order > 0.8 && order < 1.2, "{order}");
    let broken = ProtocolSchedule { t2: s.t2 + 4.0, ..s };
    assert!(verify_reversal_identity(&sys, &broken, drive, 64).is_err());
    let r = reversal_deviation(&sys, &broken, drive, 64).unwrap();
    assert!(!r.mirrored);
    assert!(r.deviation > 10.0 * reports[2].deviation);
}

#[test]
fn convergence_order_of_exact_power_law() {
    let reports: Vec<ReversalReport> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt: &f64| ReversalReport { steps: 0, dt, mirrored: true, deviation: 3.0 * dt * dt, max_norm_error: 0.0 })
        .collect();
    assert!((convergence_order(&reports).unwrap() - 2.0).abs() < 1e-12);
    assert!(convergence_order(&reports[..1]).is_none());
}
