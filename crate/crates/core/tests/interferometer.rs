use std::f64::consts::PI;

use crib_core::envelopes::*;
use crib_core::interferometer::*;
use crib_core::memory::{IdealMemory, PlainDelay};
use crib_core::Error;

fn pulse() -> SampledEnvelope<f64> {
    make_gaussian(TimeGrid::spanning(-4.0, 4.0, 0.05).unwrap(), 2.0, 0.0, 0.0, 1.0).unwrap()
}

fn mz(alpha: f64) -> MzConfig<f64> {
    MzConfig::new(6.0, 0.0).unwrap().with_alpha(alpha).unwrap()
}

fn ideal() -> IdealMemory<f64> {
    IdealMemory::new(0.3, 40.0)
}

fn alphas(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

#[test]
fn single_pass_splits_into_two_pulses() {
    let p = pulse();
    let out = mz_pass(&p, &mz(0.7), Direction::LeftToRight).unwrap();
    assert!((out.out.energy() - 0.5).abs() < 1e-10);
    assert!((out.unused.energy() - 0.5).abs() < 1e-10);
    assert!((out.out.energy_between(-4.0, 3.0) - 0.25).abs() < 1e-10);
    // Long-arm pulse carries e^{iα} relative to the short one.
    let rel = out.out.value_at(6.0) / out.out.value_at(0.0);
    assert!((rel.arg() - 0.7).abs() < 1e-10);
    let back = mz_pass(&p, &mz(0.7), Direction::RightToLeft).unwrap();
    assert_eq!(back.out.samples(), out.out.samples());
}

#[test]
fn unequal_couplers_keep_energy() {
    let p = pulse();
    let m = mz(1.1).with_coupler_ratio(0.3).unwrap();
    let out = mz_pass(&p, &m, Direction::LeftToRight).unwrap();
    assert!((out.out.energy() + out.unused.energy() - 1.0).abs() < 1e-10);
    assert!((out.out.energy() - 2.0 * 0.3 * 0.7).abs() < 1e-10);
    assert!(MzConfig::new(6.0, 0.0).unwrap().with_coupler_ratio(1.0).is_err());
}

#[test]
fn reversing_memory_combines_short_long_and_long_short() {
    let dp = double_pass(&pulse(), &mz(0.0), &ideal()).unwrap();
    assert_eq!(dp.composition[0], vec!["ls"]);
    let mut central = dp.composition[1].clone();
    central.sort();
    assert_eq!(central, vec!["ll", "ss"]);
    assert_eq!(dp.composition[2], vec!["sl"]);
    let total = dp.i_early + dp.i_central + dp.i_late + dp.unused.0 + dp.unused.1;
    assert!((total - 1.0).abs() < 1e-8);
}

#[test]
fn reversing_memory_fringe_follows_cos_squared() {
    let p = pulse();
    for a in [0.0, 0.4, PI / 2.0, 2.0, 3.0] {
        let dp = double_pass(&p, &mz(a), &ideal()).unwrap();
        // Paths ss and ll each carry (rt)² = 1/4 of amplitude; ll adds e^{2iα}.
        let expected = (0.25f64 * 2.0 * a.cos()).powi(2);
        assert!((dp.i_central - expected).abs() < 1e-7, "α = {a}: {} vs {expected}", dp.i_central);
        assert!((dp.i_central - path_sum_central(&mz(a), 1.0, true)).abs() < 1e-7);
        assert!((dp.i_early - 1.0 / 16.0).abs() < 1e-7);
        assert!((dp.i_late - 1.0 / 16.0).abs() < 1e-7);
    }
}

#[test]
fn fringe_has_period_pi_and_full_visibility() {
    let points = fringe_sweep(&pulse(), &mz(0.0), &ideal(), &alphas(64)).unwrap();
    assert!(visibility(&points) > 0.999);
    assert!((fringe_period(&points).unwrap() - PI).abs() < 1e-12);
    let null = points.iter().find(|p| (p.alpha - PI / 2.0).abs() < 1e-12).unwrap();
    assert!(null.i_central < 1e-6);
}

#[test]
fn plain_delay_central_peak_ignores_alpha() {
    let delay = PlainDelay { delay: 40.0 };
    let points = fringe_sweep(&pulse(), &mz(0.0), &delay, &alphas(32)).unwrap();
    assert!(visibility(&points) < 1e-6);
    for p in &points {
        assert!((p.i_central - 0.25).abs() < 1e-7);
    }
    let dp = double_pass(&pulse(), &mz(0.5), &delay).unwrap();
    assert_eq!(dp.composition[0], vec!["ss"]);
    assert_eq!(dp.composition[2], vec!["ll"]);
    assert!((path_sum_central(&mz(0.5), 1.0, false) - 0.25).abs() < 1e-12);
}

#[test]
fn blocking_isolates_the_central_paths() {
    let p = pulse();
    let only_ss = [ArmBlock { pass: 1, arm: Arm::Long }, ArmBlock { pass: 2, arm: Arm::Long }];
    let only_ll = [ArmBlock { pass: 1, arm: Arm::Short }, ArmBlock { pass: 2, arm: Arm::Short }];
    for a in [0.0, 1.0, PI / 2.0] {
        let ss = double_pass_blocked(&p, &mz(a), &ideal(), &only_ss).unwrap();
        assert_eq!(ss.composition[1], vec!["ss"]);
        assert!(ss.composition[0].is_empty() && ss.composition[2].is_empty());
        assert!((ss.i_central - 1.0 / 16.0).abs() < 1e-8);
        let ll = double_pass_blocked(&p, &mz(a), &ideal(), &only_ll).unwrap();
        assert_eq!(ll.composition[1], vec!["ll"]);
        assert!((ll.i_central - 1.0 / 16.0).abs() < 1e-8);
        // The two fields differ by e^{2iα}.
        let rel = overlap(&ss.central, &ll.central).unwrap() / ss.i_central;
        assert!((rel - crib_core::Complex::from_polar(1.0, 2.0 * a)).norm() < 1e-6);
    }
    let none = [ArmBlock { pass: 1, arm: Arm::Short }, ArmBlock { pass: 1, arm: Arm::Long }];
    assert!(double_pass_blocked(&p, &mz(0.0), &ideal(), &none).is_err());
}

#[test]
fn short_delay_breaks_the_premise() {
    let m = MzConfig::new(2.0, 0.0).unwrap();
    assert!(matches!(double_pass(&pulse(), &m, &ideal()), Err(Error::Premise(_))));
}

#[test]
fn fringe_period_needs_a_sweep() {
    let pts = vec![FringePoint { alpha: 0.0, i_early: 0.0, i_central: 1.0, i_late: 0.0 }; 3];
    assert!(fringe_period(&pts).is_none());
}
