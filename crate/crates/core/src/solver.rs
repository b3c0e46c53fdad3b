//! Single-excitation field–coherence propagation in retarded time.
//!
//! Working equations (forward stage, `u = t − z`):
//!
//! ```text
//! ∂_u P(z,Δ,u) = −iΔ·P + i·g·A(z,u)
//! ∂_z A(z,u)   = i·g·Σₖ wₖ·P(z,Δₖ,u)
//! ```
//!
//! with `g = √(β/L)` from [`AtomicMedium::coupling`]. `P` lives at cell
//! centers and `A` on cell faces; each time step is the implicit midpoint rule
//! in `u` coupled to the midpoint rule in `z`, which makes
//! `Σ|A_in|²du = Σ|A_out|²du + Σ wₖ|P|²dz` hold to round-off and makes the
//! backward stage the exact discrete inverse of the forward one.
//!
//! Input sample `n` drives the interval `[u_n, u_n + dt]` whose midpoint is the
//! sample time. Pulse 1 acts at constant forward retarded time `u = t₁`;
//! pulse 2 travels backward and acts at constant `u' = t + z − L = t₂ − L`.
//! The echo sample `j` therefore leaves `z = 0` at lab time `t₂ + (j+½)·dt`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::envelopes::{fidelity, overlap, SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::ideal_map::{ideal_retrieve_envelope, spectrum_at};
use crate::medium::{AtomicMedium, CoherenceField, Profile, Transition};
use crate::real::{cis, Real};
use crate::schedule::ProtocolSchedule;

/// Step-size limits and edge checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Largest allowed `max|Δ|·du`.
    pub max_rotation: f64,
    /// Largest allowed optical depth per spatial cell.
    pub max_cell_depth: f64,
    /// Relative energy allowed to touch the window edge.
    pub edge_tolerance: f64,
    /// Samples at the end of the window inspected by the edge check.
    pub edge_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_rotation: 2.5, max_cell_depth: 1.0, edge_tolerance: 1e-8, edge_samples: 4 }
    }
}

/// Time interval in lab time. For the forward stage it is measured at the
/// entrance face, for the backward stage at the exit face `z = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window<T> {
    pub start: T,
    pub end: T,
}

impl<T: Real> Window<T> {
    pub fn new(start: T, end: T) -> Self {
        Self { start, end }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepReport {
    pub dz: f64,
    pub du: f64,
    pub steps: usize,
    /// `max|Δ|·du`.
    pub rotation: f64,
    /// Optical depth per cell.
    pub cell_depth: f64,
    /// Leading local error of the midpoint rules, `max(rotation, cell_depth)³/12`.
    pub max_truncation_estimate: f64,
}

/// One row of the energy ledger.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub stage: String,
    pub field_in: f64,
    pub field_out: f64,
    pub coherence_in: f64,
    pub coherence: f64,
    pub leaked: f64,
}

impl LedgerEntry {
    /// `field_in + coherence_in − field_out − coherence − leaked`.
    pub fn imbalance(&self) -> f64 {
        self.field_in + self.coherence_in - self.field_out - self.coherence - self.leaked
    }

    /// Imbalance relative to the energy entering the stage.
    pub fn relative_imbalance(&self) -> f64 {
        let scale = self.field_in + self.coherence_in;
        if scale > 0.0 {
            self.imbalance().abs() / scale
        } else {
            self.imbalance().abs()
        }
    }
}

#[derive(Clone, Debug)]
pub struct StageResult<T> {
    pub field_out: SampledEnvelope<T>,
    pub coherence: CoherenceField<T>,
    pub leaked_energy: T,
    pub step_report: StepReport,
    pub ledger: LedgerEntry,
}

fn check_steps<T: Real>(medium: &AtomicMedium<T>, du: T, steps: usize, cfg: &SolverConfig) -> Result<StepReport> {
    let rotation = (medium.max_abs_detuning() * du).as_f64();
    let cell_depth = medium.optical_depth().as_f64() / medium.nz() as f64;
    if rotation > cfg.max_rotation {
        return Err(Error::StepSize(format!(
            "max|Δ|·du = {rotation:.3} exceeds {}; reduce dt or the detuning span",
            cfg.max_rotation
        )));
    }
    if cell_depth > cfg.max_cell_depth {
        return Err(Error::StepSize(format!(
            "optical depth per cell {cell_depth:.3} exceeds {}; increase nz",
            cfg.max_cell_depth
        )));
    }
    Ok(StepReport {
        dz: medium.dz().as_f64(),
        du: du.as_f64(),
        steps,
        rotation,
        cell_depth,
        max_truncation_estimate: rotation.max(cell_depth).powi(3) / 12.0,
    })
}

/// Marches `drive.len()` time steps. Cells are visited in `cells` order and
/// the field leaving the last one is returned.
fn march<T: Real>(
    medium: &AtomicMedium<T>,
    detunings: &[T],
    amps: &mut [Complex<T>],
    cells: &[usize],
    du: T,
    drive: impl Fn(usize) -> Complex<T>,
    steps: usize,
) -> Vec<Complex<T>> {
    let nk = detunings.len();
    let g = medium.coupling();
    let dz = medium.dz();
    let two = T::lit(2.0);
    let i = Complex::new(T::zero(), T::one());
    let denom: Vec<Complex<T>> =
        detunings.iter().map(|&d| Complex::new(T::one(), T::zero()) / Complex::new(two, d * du)).collect();
    let wd: Vec<Complex<T>> = denom.iter().zip(medium.weights()).map(|(&c, &w)| c * w).collect();
    let q = wd.iter().fold(Complex::new(T::zero(), T::zero()), |a, &c| a + c);
    let igdu = i * (g * du);
    let igdz = i * (g * dz);
    let lhs = Complex::new(T::one(), T::zero()) + q * (g * g * du * dz / two);
    let mut out = Vec::with_capacity(steps);
    for n in 0..steps {
        let mut a = drive(n);
        for &cell in cells {
            let row = &mut amps[cell * nk..(cell + 1) * nk];
            let r = row.iter().zip(&wd).fold(Complex::new(T::zero(), T::zero()), |acc, (&p, &c)| acc + c * p);
            let s = (r * two + igdu * q * a) / lhs;
            let a_c = a + igdz * s / two;
            let kick = igdu * a_c;
            for (p, &c) in row.iter_mut().zip(&denom) {
                let mid = (*p * two + kick) * c;
                *p = mid * two - *p;
            }
            a = a + igdz * s;
        }
        out.push(a);
    }
    out
}

fn edge_energy<T: Real>(samples: &[Complex<T>], count: usize, dt: T) -> T {
    let from = samples.len().saturating_sub(count);
    samples[from..].iter().fold(T::zero(), |a, s| a + s.norm_sqr()) * dt
}

/// Forward absorption of `input` over `window` (lab time at `z = 0`).
///
/// The window start and end are snapped to the sample boundaries
/// `t_start − dt/2 + n·dt`; input samples outside it are not fed and count as
/// leaked energy. The returned field is sampled at the exit face `z = L`.
pub fn absorb<T: Real>(
    input: &SampledEnvelope<T>,
    medium: &AtomicMedium<T>,
    window: Window<T>,
    cfg: &SolverConfig,
) -> Result<StageResult<T>> {
    if medium.is_inverted() {
        return Err(Error::param("medium", "absorption expects a medium that has not been inverted"));
    }
    let dt = input.dt();
    let u0 = input.t_start() - dt / T::lit(2.0);
    let n0 = ((window.start - u0) / dt).round().to_isize().unwrap_or(0);
    let n1 = ((window.end - u0) / dt).round().to_isize().unwrap_or(0);
    if n1 <= n0 {
        return Err(Error::param("window", "must contain at least one time step"));
    }
    let steps = (n1 - n0) as usize;
    let report = check_steps(medium, dt, steps, cfg)?;
    let e_in = input.energy();
    let len = input.len() as isize;
    let inside = |n: isize| n >= 0 && n < len;
    let leaked = (0..len)
        .filter(|&n| n < n0 || n >= n1)
        .fold(T::zero(), |a, n| a + input.samples()[n as usize].norm_sqr())
        * dt;
    if leaked > T::lit(cfg.edge_tolerance) * e_in {
        return Err(Error::WindowOverflow(format!(
            "input energy {} falls outside the absorption window",
            leaked.as_f64()
        )));
    }
    let t_end = u0 + dt * T::from_isize(n1).unwrap();
    let mut coherence = CoherenceField::zeros(medium, Transition::Sigma13, t_end, dt);
    let cells: Vec<usize> = (0..medium.nz()).collect();
    let drive = |k: usize| {
        let n = n0 + k as isize;
        if inside(n) {
            input.samples()[n as usize]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    };
    let out = march(medium, medium.detunings(), &mut coherence.amps, &cells, dt, drive, steps);
    let t_first = input.t_start() + dt * T::from_isize(n0).unwrap() + medium.length();
    let field_out = SampledEnvelope::new(t_first, dt, out)?.with_carrier_phase(input.carrier_phase());
    let e_out = field_out.energy();
    let stored = coherence.excitation_norm();
    Ok(StageResult {
        ledger: LedgerEntry {
            stage: "absorb".into(),
            field_in: e_in.as_f64(),
            field_out: e_out.as_f64(),
            coherence_in: 0.0,
            coherence: stored.as_f64(),
            leaked: leaked.as_f64(),
        },
        field_out,
        coherence,
        leaked_energy: leaked,
        step_report: report,
    })
}

/// Which control π-pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PulseIndex {
    First,
    Second,
}

/// Instantaneous control π-pulse.
///
/// Pulse 1 (`σ₁₃ → σ₁₂`) multiplies by `i·e^{−i(ξ₁+ω₃₂t₁)}`; pulse 2
/// (`σ₁₂ → σ₁₃`) by `i·e^{+i(ξ₂+ω₃₂t₂)}·e^{iεz}` and starts the backward frame
/// at `t_event`. Together they give `−e^{−iχ₁₂}`; the spatial phases
/// `±ω₃₂z` are absorbed in the backward mode, leaving only the residual
/// mismatch `ε` of the medium.
pub fn control_pi_pulse<T: Real>(
    coh: &CoherenceField<T>,
    pulse: PulseIndex,
    xi: T,
    t_event: T,
    medium: &AtomicMedium<T>,
) -> Result<CoherenceField<T>> {
    let (expected, next, phase) = match pulse {
        PulseIndex::First => (Transition::Sigma13, Transition::Sigma12, T::FRAC_PI_2() - xi - medium.omega32() * t_event),
        PulseIndex::Second => (Transition::Sigma12, Transition::Sigma13, T::FRAC_PI_2() + xi + medium.omega32() * t_event),
    };
    if coh.active != expected {
        return Err(Error::WrongTransition { expected: expected.name(), found: coh.active.name() });
    }
    let (nz, nk) = coh.shape();
    if nz != medium.nz() || nk != medium.n_detunings() {
        return Err(Error::param("medium", "grid does not match the coherence field"));
    }
    let mut out = coh.scaled(cis(phase));
    if pulse == PulseIndex::Second && medium.mismatch() != T::zero() {
        for iz in 0..nz {
            let f = cis(medium.mismatch() * medium.z(iz));
            for k in 0..nk {
                out.set_amp(iz, k, out.amp(iz, k) * f);
            }
        }
    }
    out.active = next;
    out.stored_phase = crate::real::wrap_phase(coh.stored_phase + phase);
    out.epoch = t_event;
    Ok(out)
}

/// Spin-coherence storage: amplitudes decay as `e^{−γ·duration}`.
pub fn store<T: Real>(coh: &CoherenceField<T>, duration: T, decoherence_rate: T) -> Result<CoherenceField<T>> {
    if coh.active != Transition::Sigma12 {
        return Err(Error::WrongTransition { expected: Transition::Sigma12.name(), found: coh.active.name() });
    }
    if !(duration >= T::zero()) {
        return Err(Error::param("duration", "must be non-negative"));
    }
    if !(decoherence_rate >= T::zero()) {
        return Err(Error::param("decoherence_rate", "must be non-negative"));
    }
    let mut out = coh.scaled(Complex::new((-decoherence_rate * duration).exp(), T::zero()));
    out.epoch = coh.epoch + duration;
    Ok(out)
}

/// Backward emission from `coh` through the inverted medium. The window is
/// in lab time at `z = 0` and must start at the epoch set by pulse 2.
pub fn retrieve<T: Real>(
    coh: &CoherenceField<T>,
    medium_inverted: &AtomicMedium<T>,
    window: Window<T>,
    cfg: &SolverConfig,
) -> Result<StageResult<T>> {
    if !medium_inverted.is_inverted() {
        return Err(Error::NotInverted);
    }
    emit_backward(coh, medium_inverted, window, cfg)
}

/// [`retrieve`] without the inversion precondition, for negative controls.
pub fn emit_backward<T: Real>(
    coh: &CoherenceField<T>,
    medium: &AtomicMedium<T>,
    window: Window<T>,
    cfg: &SolverConfig,
) -> Result<StageResult<T>> {
    if coh.active != Transition::Sigma13 {
        return Err(Error::WrongTransition { expected: Transition::Sigma13.name(), found: coh.active.name() });
    }
    let (nz, nk) = coh.shape();
    if nz != medium.nz() || nk != medium.n_detunings() {
        return Err(Error::param("medium", "grid does not match the coherence field"));
    }
    let dt = coh.dt;
    if ((window.start - coh.epoch) / dt).abs() > T::lit(1e-6) {
        return Err(Error::Schedule(format!(
            "retrieval window starts at {} but pulse 2 fired at {}",
            window.start, coh.epoch
        )));
    }
    let steps = ((window.end - window.start) / dt).round().to_usize().unwrap_or(0);
    if steps == 0 {
        return Err(Error::param("window", "must contain at least one time step"));
    }
    let report = check_steps(medium, dt, steps, cfg)?;
    let e_in = coh.excitation_norm();
    let mut coherence = coh.clone();
    let cells: Vec<usize> = (0..nz).rev().collect();
    let out = march(medium, medium.detunings(), &mut coherence.amps, &cells, dt, |_| Complex::new(T::zero(), T::zero()), steps);
    if edge_energy(&out, cfg.edge_samples, dt) > T::lit(cfg.edge_tolerance) * e_in {
        return Err(Error::WindowOverflow("echo still emitting at the end of the retrieval window".into()));
    }
    let field_out = SampledEnvelope::new(window.start + dt / T::lit(2.0), dt, out)?;
    coherence.epoch = window.start + dt * T::from_usize_lossy(steps);
    let e_out = field_out.energy();
    let residual = coherence.excitation_norm();
    Ok(StageResult {
        ledger: LedgerEntry {
            stage: "retrieve".into(),
            field_in: 0.0,
            field_out: e_out.as_f64(),
            coherence_in: e_in.as_f64(),
            coherence: residual.as_f64(),
            leaked: 0.0,
        },
        field_out,
        coherence,
        leaked_energy: T::zero(),
        step_report: report,
    })
}

/// Knobs of [`run_protocol`] beyond the physical inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolOptions<T> {
    pub solver: SolverConfig,
    /// Apply the detuning inversion before retrieval. `false` is the
    /// no-rephasing negative control.
    pub invert: bool,
    /// Extra retrieval time beyond the mirror image of the absorption window.
    pub echo_tail: T,
}

impl<T: Real> Default for ProtocolOptions<T> {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), invert: true, echo_tail: T::zero() }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolReport<T> {
    pub transmitted: SampledEnvelope<T>,
    pub echo: SampledEnvelope<T>,
    pub ideal: SampledEnvelope<T>,
    pub efficiency: T,
    pub fidelity_vs_ideal: T,
    /// `arg ⟨echo, ideal⟩`.
    pub phase_vs_ideal: T,
    /// Best fidelity over shifts of up to two samples, and the shift used.
    pub best_shift_fidelity: T,
    pub best_shift: isize,
    pub energy_ledger: Vec<LedgerEntry>,
    /// Schedule after snapping `t₁` onto the sample boundaries.
    pub schedule: ProtocolSchedule<T>,
    pub chi12: T,
    pub residual_coherence: T,
    pub forward_steps: StepReport,
    pub backward_steps: StepReport,
}

impl<T: Real> ProtocolReport<T> {
    pub fn max_relative_imbalance(&self) -> f64 {
        self.energy_ledger.iter().map(LedgerEntry::relative_imbalance).fold(0.0, f64::max)
    }
}

fn pulse_ledger<T: Real>(stage: &str, before: &CoherenceField<T>, after: &CoherenceField<T>) -> LedgerEntry {
    let (cin, cout) = (before.excitation_norm().as_f64(), after.excitation_norm().as_f64());
    LedgerEntry {
        stage: stage.into(),
        field_in: 0.0,
        field_out: 0.0,
        coherence_in: cin,
        coherence: cout,
        // Decay during storage is the only loss between the pulses.
        leaked: cin - cout,
    }
}

/// Absorb, transfer, store, transfer back, invert and retrieve.
///
/// `t₁` is moved to the nearest sample boundary `t_start − dt/2 + n·dt`; the
/// report carries the schedule actually used. `t₂` keeps its value.
pub fn run_protocol<T: Real>(
    input: &SampledEnvelope<T>,
    medium: &AtomicMedium<T>,
    schedule: &ProtocolSchedule<T>,
    decoherence_rate: T,
    options: &ProtocolOptions<T>,
) -> Result<ProtocolReport<T>> {
    schedule.validate()?;
    if input.energy() <= T::zero() {
        return Err(Error::ZeroEnergy);
    }
    let dt = input.dt();
    let u0 = input.t_start() - dt / T::lit(2.0);
    let n1 = ((schedule.t1 - u0) / dt).round();
    let t1 = u0 + n1 * dt;
    let mut effective = *schedule;
    effective.t1 = t1;
    effective.t_inv = T::lit(0.5) * (t1 + schedule.t2);
    effective.validate()?;
    let cfg = &options.solver;

    let forward = absorb(input, medium, Window::new(u0, t1), cfg)?;
    let c1 = control_pi_pulse(&forward.coherence, PulseIndex::First, effective.xi1, t1, medium)?;
    let c2 = store(&c1, effective.t2 - t1, decoherence_rate)?;
    let c3 = control_pi_pulse(&c2, PulseIndex::Second, effective.xi2, effective.t2, medium)?;
    let back_medium = if options.invert { medium.inverted() } else { medium.clone() };
    let window = Window::new(effective.t2, effective.t2 + (t1 - u0) + options.echo_tail);
    let backward = if options.invert {
        retrieve(&c3, &back_medium, window, cfg)?
    } else {
        emit_backward(&c3, &back_medium, window, cfg)?
    };

    let chi12 = effective.chi12();
    let ideal = ideal_retrieve_envelope(input, chi12, effective.t_prime(input.t_start()));
    let echo = backward.field_out.clone().with_carrier_phase(input.carrier_phase());
    let efficiency = echo.energy() / input.energy();
    let (fidelity_vs_ideal, phase_vs_ideal) = if echo.energy() > T::zero() {
        (fidelity(&echo, &ideal)?, overlap(&echo, &ideal)?.arg())
    } else {
        (T::zero(), T::zero())
    };
    let (mut best_shift_fidelity, mut best_shift) = (fidelity_vs_ideal, 0);
    if echo.energy() > T::zero() {
        for shift in -2isize..=2 {
            let f = fidelity(&echo.delayed(dt * T::from_isize(shift).unwrap()), &ideal)?;
            if f > best_shift_fidelity {
                best_shift_fidelity = f;
                best_shift = shift;
            }
        }
    }
    let energy_ledger = vec![
        forward.ledger.clone(),
        pulse_ledger("pulse1", &forward.coherence, &c1),
        pulse_ledger("store", &c1, &c2),
        pulse_ledger("pulse2", &c2, &c3),
        backward.ledger.clone(),
    ];
    Ok(ProtocolReport {
        transmitted: forward.field_out,
        echo,
        ideal,
        efficiency,
        fidelity_vs_ideal,
        phase_vs_ideal,
        best_shift_fidelity,
        best_shift,
        energy_ledger,
        schedule: effective,
        chi12,
        residual_coherence: backward.coherence.excitation_norm(),
        forward_steps: forward.step_report,
        backward_steps: backward.step_report,
    })
}

/// Narrowband efficiency of backward retrieval, `η(d) = (1 − e^{−d})²`.
///
/// The backward echo amplitude at detuning ω is `1 − T(ω)` where
/// `T(ω) = e^{−d·G(ω)/G(0)}` is the single-pass intensity transmission.
pub fn efficiency_law(d: f64) -> f64 {
    (1.0 - (-d).exp()).powi(2)
}

fn spectral_average<T: Real>(input: &SampledEnvelope<T>, medium: &AtomicMedium<T>, f: impl Fn(f64) -> f64) -> Result<f64> {
    if medium.profile() == Profile::Custom {
        return Err(Error::param("profile", "spectral laws need an analytic line shape"));
    }
    let g0 = medium.profile().density(0.0);
    let d = medium.optical_depth().as_f64();
    let dt = input.dt().as_f64();
    let span = input.len() as f64 * dt;
    let n = (8 * input.len()).max(256);
    let dw = std::f64::consts::TAU / (span * 8.0);
    let omegas: Vec<T> = (0..n).map(|k| T::lit((k as f64 - n as f64 / 2.0) * dw)).collect();
    let spec = spectrum_at(input, &omegas);
    let (mut num, mut den) = (0.0, 0.0);
    for (w, s) in omegas.iter().zip(&spec) {
        let p = s.norm_sqr().as_f64();
        let x = d * medium.profile().density(w.as_f64()) / g0;
        num += p * f(x);
        den += p;
    }
    if den <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(num / den)
}

/// `∫|F|²(1 − e^{−dG(ω)/G(0)})² / ∫|F|²` for the medium's analytic profile.
pub fn spectral_efficiency<T: Real>(input: &SampledEnvelope<T>, medium: &AtomicMedium<T>) -> Result<f64> {
    spectral_average(input, medium, |x| (1.0 - (-x).exp()).powi(2))
}

/// Fraction of input energy transmitted, `∫|F|²e^{−dG(ω)/G(0)} / ∫|F|²`.
pub fn spectral_transmission<T: Real>(input: &SampledEnvelope<T>, medium: &AtomicMedium<T>) -> Result<f64> {
    spectral_average(input, medium, |x| (-x).exp())
}

/// Input grid that holds a pulse of width `1/δω` centered at `t_center` with
/// `margin` standard deviations on either side.
pub fn pulse_grid<T: Real>(delta_omega: T, t_center: T, margin: T, dt: T) -> Result<TimeGrid<T>> {
    let half = margin / delta_omega;
    TimeGrid::spanning(t_center - half, t_center + half, dt)
}
