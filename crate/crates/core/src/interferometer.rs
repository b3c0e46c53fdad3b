//! Double pass through an imbalanced Mach–Zehnder interferometer with a
//! memory between the passes.
//!
//! Couplers are symmetric, `[[t, ir], [ir, t]]` with `r² = coupler_ratio`.
//! The observed port of a pass is the one reached by crossing exactly once,
//! so a pass maps `E(t)` to `irt·[E(t) + e^{iα}E(t − ΔL)]`; the other port
//! receives `t²E(t) − r²e^{iα}E(t − ΔL)`. Both directions give the same
//! amplitudes. Another coupler convention moves the fringe by a constant
//! phase but leaves its period and visibility unchanged.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::envelopes::{SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::memory::{shifted_onto, MemoryBackend};
use crate::real::{cis, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MzConfig<T> {
    /// Path difference `ΔL/c`.
    pub delta_l: T,
    /// Carrier frequency; only the product `α = ω₀·ΔL` is used.
    pub omega0: T,
    /// Power fraction sent to the cross port of each coupler.
    pub coupler_ratio: T,
    /// Smallest `ΔL` in units of the pulse rms duration.
    pub min_separation: T,
}

impl<T: Real> MzConfig<T> {
    pub fn new(delta_l: T, omega0: T) -> Result<Self> {
        let mz = Self { delta_l, omega0, coupler_ratio: T::lit(0.5), min_separation: T::lit(10.0) };
        mz.validate()?;
        Ok(mz)
    }

    pub fn with_coupler_ratio(mut self, ratio: T) -> Result<Self> {
        self.coupler_ratio = ratio;
        self.validate()?;
        Ok(self)
    }

    /// Sets `ω₀` so that `ω₀·ΔL = alpha`, keeping the envelope delay.
    pub fn with_alpha(mut self, alpha: T) -> Result<Self> {
        if self.delta_l == T::zero() {
            if alpha != T::zero() {
                return Err(Error::param("alpha", "a balanced interferometer has α = 0"));
            }
            return Ok(self);
        }
        self.omega0 = alpha / self.delta_l;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupler_ratio > T::zero() && self.coupler_ratio < T::one()) {
            return Err(Error::param("coupler_ratio", "must lie strictly between 0 and 1"));
        }
        if !(self.delta_l >= T::zero()) || !self.omega0.is_finite() {
            return Err(Error::param("delta_l", "must be non-negative with a finite carrier"));
        }
        Ok(())
    }

    pub fn alpha(&self) -> T {
        self.omega0 * self.delta_l
    }

    /// `(t, r)` field amplitudes of a coupler.
    pub fn coupler(&self) -> (T, T) {
        ((T::one() - self.coupler_ratio).sqrt(), self.coupler_ratio.sqrt())
    }

    /// Amplitudes `(c_s, c_l)` of the observed port, `c_l` including `e^{iα}`.
    pub fn port_amplitudes(&self) -> (Complex<T>, Complex<T>) {
        let (t, r) = self.coupler();
        let c = Complex::new(T::zero(), r * t);
        (c, c * cis(self.alpha()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Arm {
    Short,
    Long,
}

/// An arm made opaque on one pass (1 or 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ArmBlock {
    pub pass: u8,
    pub arm: Arm,
}

#[derive(Clone, Debug)]
pub struct MzOutput<T> {
    pub out: SampledEnvelope<T>,
    pub unused: SampledEnvelope<T>,
    pub c_short: Complex<T>,
    pub c_long: Complex<T>,
}

fn extended_grid<T: Real>(env: &SampledEnvelope<T>, delay: T) -> Result<TimeGrid<T>> {
    let extra = (delay / env.dt()).ceil().to_usize().unwrap_or(0);
    TimeGrid::new(env.t_start(), env.dt(), env.len() + extra)
}

/// One pass; the output grid is the input grid extended by `ΔL`.
pub fn mz_pass<T: Real>(env: &SampledEnvelope<T>, mz: &MzConfig<T>, direction: Direction) -> Result<MzOutput<T>> {
    mz_pass_blocked(env, mz, direction, None)
}

pub fn mz_pass_blocked<T: Real>(
    env: &SampledEnvelope<T>,
    mz: &MzConfig<T>,
    // Reciprocal symmetric couplers give the same amplitudes both ways.
    _direction: Direction,
    blocked: Option<Arm>,
) -> Result<MzOutput<T>> {
    mz.validate()?;
    let grid = extended_grid(env, mz.delta_l)?;
    let short = env.on_grid(grid)?;
    let long = shifted_onto(env, mz.delta_l, grid)?;
    let (t, r) = mz.coupler();
    let (mut c_s, mut c_l) = mz.port_amplitudes();
    let mut u_s = Complex::new(t * t, T::zero());
    let mut u_l = cis(mz.alpha()) * (-r * r);
    match blocked {
        Some(Arm::Short) => {
            c_s = Complex::new(T::zero(), T::zero());
            u_s = c_s;
        }
        Some(Arm::Long) => {
            c_l = Complex::new(T::zero(), T::zero());
            u_l = c_l;
        }
        None => {}
    }
    let mix = |a: Complex<T>, b: Complex<T>| -> Result<SampledEnvelope<T>> {
        let samples = short.samples().iter().zip(long.samples()).map(|(&x, &y)| x * a + y * b).collect();
        Ok(SampledEnvelope::new(grid.t_start, grid.dt, samples)?.with_carrier_phase(env.carrier_phase()))
    };
    Ok(MzOutput { out: mix(c_s, c_l)?, unused: mix(u_s, u_l)?, c_short: c_s, c_long: c_l })
}

/// The three pulses returning through the interferometer.
#[derive(Clone, Debug)]
pub struct DoublePass<T> {
    pub alpha: T,
    pub output: SampledEnvelope<T>,
    pub early: SampledEnvelope<T>,
    pub central: SampledEnvelope<T>,
    pub late: SampledEnvelope<T>,
    pub i_early: T,
    pub i_central: T,
    pub i_late: T,
    /// Labels of the paths ending in each pulse, first letter = first pass.
    pub composition: [Vec<&'static str>; 3],
    /// Energy leaving the unused ports of pass 1 and pass 2.
    pub unused: (T, T),
    pub memory_efficiency: T,
}

/// Memory outputs for the short- and long-arm components of pass 1, with the
/// long one taken at `α = 0`. Linear, phase-covariant backends let every `α`
/// reuse them.
#[derive(Clone, Debug)]
pub struct StoredArms<T> {
    short: Option<SampledEnvelope<T>>,
    long: Option<SampledEnvelope<T>>,
    reversing: bool,
    unused_first: (SampledEnvelope<T>, SampledEnvelope<T>),
    efficiency: T,
}

fn check_premise<T: Real>(pulse: &SampledEnvelope<T>, mz: &MzConfig<T>) -> Result<()> {
    let (_, width) = pulse.centroid_and_width().ok_or(Error::ZeroEnergy)?;
    if mz.delta_l < mz.min_separation * width {
        return Err(Error::Premise(format!(
            "ΔL = {} is below {} rms pulse durations ({})",
            mz.delta_l,
            mz.min_separation,
            width
        )));
    }
    Ok(())
}

/// Sends the pass-1 arm components through `backend`.
pub fn store_arms<T: Real>(
    pulse: &SampledEnvelope<T>,
    mz: &MzConfig<T>,
    backend: &dyn MemoryBackend<T>,
    blocks: &[ArmBlock],
) -> Result<StoredArms<T>> {
    mz.validate()?;
    check_premise(pulse, mz)?;
    let grid = extended_grid(pulse, mz.delta_l)?;
    let short = pulse.on_grid(grid)?;
    let long = shifted_onto(pulse, mz.delta_l, grid)?;
    let (t, r) = mz.coupler();
    let blocked = |arm| blocks.iter().any(|b| b.pass == 1 && b.arm == arm);
    let c = Complex::new(T::zero(), r * t);
    let mut eff = T::zero();
    let mut reversing = false;
    let mut run = |x: &SampledEnvelope<T>| -> Result<SampledEnvelope<T>> {
        let out = backend.transform(&x.scaled(c))?;
        eff = out.efficiency;
        reversing = out.pivot.is_some();
        Ok(out.output)
    };
    let short_out = if blocked(Arm::Short) { None } else { Some(run(&short)?) };
    let long_out = if blocked(Arm::Long) { None } else { Some(run(&long)?) };
    let zero = Complex::new(T::zero(), T::zero());
    let unused_short = if blocked(Arm::Short) { short.scaled(zero) } else { short.scaled(Complex::new(t * t, T::zero())) };
    let unused_long = if blocked(Arm::Long) { long.scaled(zero) } else { long.scaled(Complex::new(-r * r, T::zero())) };
    Ok(StoredArms { short: short_out, long: long_out, reversing, unused_first: (unused_short, unused_long), efficiency: eff })
}

fn sum_on_union<T: Real>(parts: &[SampledEnvelope<T>]) -> Result<SampledEnvelope<T>> {
    let mut acc = parts[0].clone();
    for p in &parts[1..] {
        acc = acc.add(p)?;
    }
    Ok(acc)
}

/// Second pass and pulse separation for one `α`.
pub fn second_pass<T: Real>(stored: &StoredArms<T>, mz: &MzConfig<T>, blocks: &[ArmBlock]) -> Result<DoublePass<T>> {
    let alpha = mz.alpha();
    let e_alpha = cis(alpha);
    let (c_s, c_l) = mz.port_amplitudes();
    let (t, r) = mz.coupler();
    let blocked2 = |arm| blocks.iter().any(|b| b.pass == 2 && b.arm == arm);
    let mut paths: Vec<(&'static str, SampledEnvelope<T>)> = Vec::new();
    let mut unused2 = Vec::new();
    for (label, stored_arm, first_phase) in [("s", &stored.short, Complex::new(T::one(), T::zero())), ("l", &stored.long, e_alpha)] {
        let Some(m) = stored_arm else { continue };
        let m = m.scaled(first_phase);
        let grid = extended_grid(&m, mz.delta_l)?;
        let via_short = m.on_grid(grid)?;
        let via_long = shifted_onto(&m, mz.delta_l, grid)?;
        if !blocked2(Arm::Short) {
            paths.push((if label == "s" { "ss" } else { "ls" }, via_short.scaled(c_s)));
            unused2.push(via_short.scaled(Complex::new(t * t, T::zero())));
        }
        if !blocked2(Arm::Long) {
            paths.push((if label == "s" { "sl" } else { "ll" }, via_long.scaled(c_l)));
            unused2.push(via_long.scaled(e_alpha * (-r * r)));
        }
    }
    if paths.is_empty() {
        return Err(Error::param("blocks", "every path is blocked"));
    }
    let envs: Vec<SampledEnvelope<T>> = paths.iter().map(|p| p.1.clone()).collect();
    let output = sum_on_union(&envs)?;
    let unused_second = sum_on_union(&unused2)?.energy();
    let unused_first = stored.unused_first.0.add(&stored.unused_first.1)?.energy();

    // Path arrival times, from the unblocked geometry of each path.
    let centers: Vec<(&'static str, T)> = paths
        .iter()
        .filter_map(|(name, env)| env.centroid_and_width().map(|c| (*name, c.0)))
        .collect();
    let slots = pulse_slots(stored, mz)?;
    let mut composition: [Vec<&'static str>; 3] = Default::default();
    for (name, c) in &centers {
        let k = slot_of(&slots, *c);
        composition[k].push(name);
    }
    let cut = |k: usize| -> Result<SampledEnvelope<T>> {
        let mut env = output.clone();
        let times: Vec<T> = env.times().collect();
        for (s, t) in env.samples_mut().iter_mut().zip(times) {
            if slot_of(&slots, t) != k {
                *s = Complex::new(T::zero(), T::zero());
            }
        }
        Ok(env)
    };
    let (early, central, late) = (cut(0)?, cut(1)?, cut(2)?);
    Ok(DoublePass {
        alpha,
        i_early: early.energy(),
        i_central: central.energy(),
        i_late: late.energy(),
        early,
        central,
        late,
        output,
        composition,
        unused: (unused_first, unused_second),
        memory_efficiency: stored.efficiency,
    })
}

/// Nominal centers of the three output pulses, from the unblocked memory
/// images of a single arm shifted by `0`, `ΔL`, `2ΔL`.
fn pulse_slots<T: Real>(stored: &StoredArms<T>, mz: &MzConfig<T>) -> Result<[T; 3]> {
    // A reversing memory returns the long-arm image ΔL before the short one.
    let center = |e: &SampledEnvelope<T>| e.centroid_and_width().map(|c| c.0).ok_or(Error::ZeroEnergy);
    let lag = if stored.reversing { -mz.delta_l } else { mz.delta_l };
    let (a, b) = match (&stored.short, &stored.long) {
        (Some(s), Some(l)) => (center(s)?, center(l)?),
        (Some(s), None) => (center(s)?, center(s)? + lag),
        (None, Some(l)) => (center(l)? - lag, center(l)?),
        (None, None) => return Err(Error::param("blocks", "both pass-1 arms are blocked")),
    };
    let first = a.min(b);
    Ok([first, first + mz.delta_l, first + mz.delta_l * T::lit(2.0)])
}

fn slot_of<T: Real>(slots: &[T; 3], t: T) -> usize {
    let half = T::lit(0.5);
    if t < (slots[0] + slots[1]) * half {
        0
    } else if t < (slots[1] + slots[2]) * half {
        1
    } else {
        2
    }
}

/// Full double pass at the `α` of `mz`.
pub fn double_pass<T: Real>(pulse: &SampledEnvelope<T>, mz: &MzConfig<T>, backend: &dyn MemoryBackend<T>) -> Result<DoublePass<T>> {
    double_pass_blocked(pulse, mz, backend, &[])
}

pub fn double_pass_blocked<T: Real>(
    pulse: &SampledEnvelope<T>,
    mz: &MzConfig<T>,
    backend: &dyn MemoryBackend<T>,
    blocks: &[ArmBlock],
) -> Result<DoublePass<T>> {
    let stored = store_arms(pulse, mz, backend, blocks)?;
    second_pass(&stored, mz, blocks)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringePoint {
    pub alpha: f64,
    pub i_early: f64,
    pub i_central: f64,
    pub i_late: f64,
}

/// Output intensities over a sweep of `α` at fixed `ΔL`.
pub fn fringe_sweep<T: Real>(
    pulse: &SampledEnvelope<T>,
    mz: &MzConfig<T>,
    backend: &dyn MemoryBackend<T>,
    alphas: &[T],
) -> Result<Vec<FringePoint>> {
    let stored = store_arms(pulse, &mz.with_alpha(T::zero())?, backend, &[])?;
    alphas
        .par_iter()
        .map(|&a| {
            let dp = second_pass(&stored, &mz.with_alpha(a)?, &[])?;
            Ok(FringePoint {
                alpha: a.as_f64(),
                i_early: dp.i_early.as_f64(),
                i_central: dp.i_central.as_f64(),
                i_late: dp.i_late.as_f64(),
            })
        })
        .collect()
}

/// `(I_max − I_min)/(I_max + I_min)` of the central pulse.
pub fn visibility(points: &[FringePoint]) -> f64 {
    let max = points.iter().map(|p| p.i_central).fold(f64::MIN, f64::max);
    let min = points.iter().map(|p| p.i_central).fold(f64::MAX, f64::min);
    if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    }
}

/// Period in `α` of the strongest harmonic of the central intensity. The
/// sweep must cover `[0, 2π)` uniformly.
pub fn fringe_period(points: &[FringePoint]) -> Option<f64> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let mean = points.iter().map(|p| p.i_central).sum::<f64>() / n as f64;
    (1..=n / 2)
        .map(|m| {
            let (mut c, mut s) = (0.0, 0.0);
            for p in points {
                c += (p.i_central - mean) * (m as f64 * p.alpha).cos();
                s += (p.i_central - mean) * (m as f64 * p.alpha).sin();
            }
            (m, c * c + s * s)
        })
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .filter(|(_, power)| *power > 1e-24)
        .map(|(m, _)| std::f64::consts::TAU / m as f64)
}

/// Central intensity predicted by summing the four paths of a pulse with
/// unit energy through a lossless memory of efficiency `eta`:
/// `η·|c_s²·(1 + e^{2iα})|²` for a reversing memory.
pub fn path_sum_central<T: Real>(mz: &MzConfig<T>, eta: T, reversing: bool) -> T {
    let (c_s, c_l) = mz.port_amplitudes();
    let amp = if reversing { c_s * c_s + c_l * c_l } else { c_s * c_l + c_l * c_s };
    amp.norm_sqr() * eta
}
