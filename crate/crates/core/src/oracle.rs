//! Brute-force single-excitation evolution of point atoms coupled to a
//! discrete set of field modes in a periodic box.
//!
//! The basis of a stage is `[modes…, atoms…]`. Forward modes have energy `+κ`
//! and backward modes `−κ`; both couple to atom `j` through
//! `H[j,m] = −Gⱼ·e^{iκzⱼ}/√L_box`. Spin-wave amplitudes produced by the
//! control pulses sit outside the Hamiltonian. Each stage Hamiltonian is
//! constant, so a single step propagator `exp(−iH·dt)` drives it.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Cauchy, ContinuousCDF, Normal};

use crate::envelopes::SampledEnvelope;
use crate::error::{Error, Result};
use crate::linalg::{propagator, CMatrix};
use crate::medium::{AtomicMedium, Profile};
use crate::real::{cis, Real};
use crate::schedule::ProtocolSchedule;

pub const MAX_ATOMS: usize = 400;
pub const MAX_MODES: usize = 512;

/// How atom detunings are drawn from the line shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Node `k` of `n` at quantile `(k+½)/n`, identical in every slice.
    #[default]
    Stratified,
    /// Independent draws per atom from a seeded generator.
    Random,
}

/// Atom layout: `n_slices` equally spaced slices, `nodes_per_slice` atoms each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_slices: usize,
    pub nodes_per_slice: usize,
    pub length: f64,
    pub d: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn n_atoms(&self) -> usize {
        self.n_slices * self.nodes_per_slice
    }

    fn validate(&self) -> Result<()> {
        if self.n_slices == 0 || self.nodes_per_slice == 0 {
            return Err(Error::param("n_slices", "need at least one atom"));
        }
        if self.n_atoms() > MAX_ATOMS {
            return Err(Error::SizeLimit(format!("{} atoms exceed the limit of {MAX_ATOMS}", self.n_atoms())));
        }
        if !(self.length > 0.0) || !(self.d >= 0.0) {
            return Err(Error::param("length", "need positive length and non-negative depth"));
        }
        if self.profile == Profile::Custom {
            return Err(Error::param("profile", "oracle sampling needs an analytic line shape"));
        }
        Ok(())
    }

    fn quantile(&self, q: f64) -> f64 {
        match self.profile {
            Profile::Lorentzian => Cauchy::new(0.0, 1.0).expect("unit Cauchy").inverse_cdf(q),
            _ => Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(q),
        }
    }

    /// Stratified detuning nodes of one slice.
    pub fn stratified_nodes(&self) -> Vec<f64> {
        let n = self.nodes_per_slice as f64;
        (0..self.nodes_per_slice).map(|k| self.quantile((k as f64 + 0.5) / n)).collect()
    }

    /// `(z, Δ)` of every atom, slice-major.
    pub fn atoms(&self) -> Result<Vec<(f64, f64)>> {
        self.validate()?;
        let dz = self.length / self.n_slices as f64;
        let mut out = Vec::with_capacity(self.n_atoms());
        match self.sampling {
            Sampling::Stratified => {
                let nodes = self.stratified_nodes();
                for i in 0..self.n_slices {
                    out.extend(nodes.iter().map(|&x| ((i as f64 + 0.5) * dz, x)));
                }
            }
            Sampling::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                for i in 0..self.n_slices {
                    for _ in 0..self.nodes_per_slice {
                        out.push(((i as f64 + 0.5) * dz, self.quantile(rng.random_range(1e-12..1.0 - 1e-12))));
                    }
                }
            }
        }
        Ok(out)
    }

    /// The continuum medium the solver sees for the same atoms: one cell per
    /// slice, equally weighted nodes and the analytic `G(0)`.
    pub fn solver_medium<T: Real>(&self) -> Result<AtomicMedium<T>> {
        self.validate()?;
        if self.sampling != Sampling::Stratified {
            return Err(Error::param("sampling", "only stratified ensembles have a matching solver grid"));
        }
        let table: Vec<(T, T)> = self.stratified_nodes().into_iter().map(|x| (T::lit(x), T::one())).collect();
        let g0 = self.profile.density(T::zero());
        AtomicMedium::from_table(&table, T::lit(self.d), self.n_slices, g0)?.with_length(T::lit(self.length))
    }

    /// Per-atom coupling `G = g·√(dz·w)` with `g² = d / (2π G(0) L)`.
    pub fn atom_coupling(&self) -> f64 {
        let g0 = self.profile.density(0.0);
        let g2 = self.d / (std::f64::consts::TAU * g0 * self.length);
        let dz = self.length / self.n_slices as f64;
        (g2 * dz / self.nodes_per_slice as f64).sqrt()
    }
}

/// Mode half-width `6·δω + 3` used around resonance.
pub fn mode_half_width(delta_omega: f64) -> f64 {
    6.0 * delta_omega + 3.0
}

/// Point atoms plus a discrete mode set in a periodic box.
#[derive(Clone, Debug)]
pub struct DiscreteSystem<T> {
    pub atom_positions: Vec<T>,
    pub atom_detunings: Vec<T>,
    pub atom_couplings: Vec<T>,
    /// Wavenumbers `κₘ = 2πm/L_box` inside the band.
    pub modes: Vec<T>,
    pub box_length: T,
    /// Clock of `state`.
    pub t_start: T,
    pub dt: T,
    /// Forward mode amplitudes followed by atom amplitudes.
    pub state: Vec<Complex<T>>,
}

impl<T: Real> DiscreteSystem<T> {
    pub fn new(spec: &EnsembleSpec, half_width: T, box_length: T, t_start: T, dt: T) -> Result<Self> {
        let atoms = spec.atoms()?;
        if !(box_length > T::zero()) || !(half_width > T::zero()) || !(dt > T::zero()) {
            return Err(Error::param("box_length", "box, band and step must be positive"));
        }
        let dk = T::TAU() / box_length;
        let m_max = (half_width / dk).floor().to_usize().unwrap_or(0);
        let n_modes = 2 * m_max + 1;
        if n_modes > MAX_MODES {
            return Err(Error::SizeLimit(format!("{n_modes} modes exceed the limit of {MAX_MODES}")));
        }
        let modes = (0..n_modes).map(|m| dk * (T::from_usize_lossy(m) - T::from_usize_lossy(m_max))).collect();
        let g = T::lit(spec.atom_coupling());
        let n_atoms = atoms.len();
        Ok(Self {
            atom_positions: atoms.iter().map(|a| T::lit(a.0)).collect(),
            atom_detunings: atoms.iter().map(|a| T::lit(a.1)).collect(),
            atom_couplings: vec![g; n_atoms],
            modes,
            box_length,
            t_start,
            dt,
            state: vec![Complex::new(T::zero(), T::zero()); n_modes + n_atoms],
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atom_positions.len()
    }

    pub fn norm_sqr(&self) -> T {
        self.state.iter().fold(T::zero(), |a, c| a + c.norm_sqr())
    }

    /// Loads an incoming forward pulse: sample `fᵢ` reaches `z = 0` at time `tᵢ`.
    /// Atoms start in the ground state.
    pub fn load_input(&mut self, input: &SampledEnvelope<T>) {
        let norm = T::one() / self.box_length.sqrt();
        let n = self.n_modes();
        for (m, &k) in self.modes.iter().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, f) in input.samples().iter().enumerate() {
                acc = acc + *f * cis(-k * (self.t_start - input.time(i)));
            }
            self.state[m] = acc * input.dt() * norm;
        }
        self.state[n..].iter_mut().for_each(|a| *a = Complex::new(T::zero(), T::zero()));
    }

    /// Field at `z` built from the current mode amplitudes.
    pub fn field_at(&self, z: T) -> Complex<T> {
        let norm = T::one() / self.box_length.sqrt();
        self.modes
            .iter()
            .zip(&self.state)
            .fold(Complex::new(T::zero(), T::zero()), |a, (&k, c)| a + *c * cis(k * z))
            * norm
    }

    /// Stage Hamiltonian. `mode_sign` is `+1` for forward modes and `−1` for
    /// backward ones; `detunings` replaces the atom detunings.
    pub fn hamiltonian(&self, mode_sign: T, detunings: &[T]) -> CMatrix<T> {
        let nm = self.n_modes();
        let n = nm + self.n_atoms();
        let mut h = CMatrix::zeros(n, n);
        let norm = T::one() / self.box_length.sqrt();
        for (m, &k) in self.modes.iter().enumerate() {
            h[(m, m)] = Complex::new(mode_sign * k, T::zero());
        }
        for j in 0..self.n_atoms() {
            let a = nm + j;
            h[(a, a)] = Complex::new(detunings[j], T::zero());
            for (m, &k) in self.modes.iter().enumerate() {
                let v = cis(k * self.atom_positions[j]) * (-self.atom_couplings[j] * norm);
                h[(a, m)] = v;
                h[(m, a)] = v.conj();
            }
        }
        h
    }
}

/// Result of [`evolve`].
#[derive(Clone, Debug)]
pub struct OracleRun<T> {
    /// Backward field at `z = 0`, sampled at `t₂ + (j+½)·dt`.
    pub echo: SampledEnvelope<T>,
    pub input_energy: T,
    pub efficiency: T,
    /// Forward-mode norm discarded at `t_inv` (transmitted light).
    pub transmitted: T,
    /// Spin amplitudes left behind by the pulses.
    pub spin_remainder: T,
    pub final_state: Vec<Complex<T>>,
    /// Largest `|‖ψ‖² − ‖ψ₀‖²|` over all steps, counting storage and discarded modes.
    pub max_norm_error: T,
}

fn step_index<T: Real>(t: T, t0: T, dt: T) -> Result<usize> {
    let x = (t - t0) / dt;
    let r = x.round();
    if (x - r).abs() > T::lit(1e-6) || r < T::zero() {
        return Err(Error::Schedule(format!("event at {t} is not on the oracle step grid")));
    }
    Ok(r.to_usize().unwrap())
}

/// Runs the full protocol: forward stage with per-atom pulse 1 at `t₁ + zⱼ`,
/// inversion at `t_inv`, backward stage with pulse 2 at `t₂ − zⱼ`, until
/// `t₂ + echo_duration`. Control phases follow the solver convention.
pub fn evolve<T: Real>(system: &DiscreteSystem<T>, schedule: &ProtocolSchedule<T>, echo_duration: T) -> Result<OracleRun<T>> {
    schedule.validate()?;
    let dt = system.dt;
    let nm = system.n_modes();
    let na = system.n_atoms();
    let t0 = system.t_start;
    let n_inv = step_index(schedule.t_inv, t0, dt)?;
    let n_echo = step_index(echo_duration, T::zero(), dt)?;
    let n_end = step_index(schedule.t2, t0, dt)? + n_echo;
    let mut pulse1 = vec![Vec::new(); n_end + 1];
    let mut pulse2 = vec![Vec::new(); n_end + 1];
    for (j, &z) in system.atom_positions.iter().enumerate() {
        let a = step_index(schedule.t1 + z, t0, dt)?;
        let b = step_index(schedule.t2 - z, t0, dt)?;
        if a == 0 || a > n_inv || b <= n_inv || b > n_end {
            return Err(Error::Schedule("control pulses must pass every atom inside their own stage".into()));
        }
        pulse1[a].push(j);
        pulse2[b].push(j);
    }
    let theta1 = schedule.xi1 + schedule.omega32 * schedule.t1;
    let theta2 = schedule.xi2 + schedule.omega32 * schedule.t2;
    let i = Complex::new(T::zero(), T::one());
    // π-pulse as the unitary swap σ₁₂ ← i·e^{−iθ}·σ₁₃, σ₁₃ ← i·e^{iθ}·σ₁₂.
    let swap = |excited: &mut Complex<T>, spin: &mut Complex<T>, theta: T| {
        let e = *excited;
        let s = *spin;
        *spin = i * cis(-theta) * e;
        *excited = i * cis(theta) * s;
    };

    let mut psi = system.state.clone();
    let norm0 = system.norm_sqr();
    let input_energy = psi[..nm].iter().fold(T::zero(), |a, c| a + c.norm_sqr());
    let mut spin = vec![Complex::new(T::zero(), T::zero()); na];
    let mut dropped = T::zero();
    let mut max_err = T::zero();
    let mut check = |psi: &[Complex<T>], spin: &[Complex<T>], dropped: T| {
        let n = psi.iter().chain(spin).fold(T::zero(), |a, c| a + c.norm_sqr()) + dropped;
        max_err = max_err.max((n - norm0).abs());
    };

    let u_f = propagator(&system.hamiltonian(T::one(), &system.atom_detunings), dt)?;
    for n in 1..=n_inv {
        psi = u_f.matvec(&psi);
        for &j in &pulse1[n] {
            let (a, b) = (&mut psi[nm + j], &mut spin[j]);
            swap(a, b, theta1);
        }
        check(&psi, &spin, dropped);
    }
    let transmitted = psi[..nm].iter().fold(T::zero(), |a, c| a + c.norm_sqr());
    dropped = dropped + transmitted;
    psi[..nm].iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));

    let inverted: Vec<T> = system.atom_detunings.iter().map(|&x| -x).collect();
    let u_b = propagator(&system.hamiltonian(-T::one(), &inverted), dt)?;
    for n in n_inv + 1..=n_end {
        psi = u_b.matvec(&psi);
        for &j in &pulse2[n] {
            let (a, b) = (&mut psi[nm + j], &mut spin[j]);
            swap(a, b, theta2);
        }
        check(&psi, &spin, dropped);
    }

    let t_final = t0 + dt * T::from_usize_lossy(n_end);
    let norm = T::one() / system.box_length.sqrt();
    let samples: Vec<Complex<T>> = (0..n_echo)
        .map(|k| {
            let t = schedule.t2 + dt * (T::from_usize_lossy(k) + T::lit(0.5));
            system
                .modes
                .iter()
                .zip(&psi)
                .fold(Complex::new(T::zero(), T::zero()), |a, (&kappa, c)| a + *c * cis(kappa * (t - t_final)))
                * norm
        })
        .collect();
    let echo = SampledEnvelope::new(schedule.t2 + dt / T::lit(2.0), dt, samples)?;
    let efficiency = if input_energy > T::zero() { echo.energy() / input_energy } else { T::zero() };
    Ok(OracleRun {
        efficiency,
        echo,
        input_energy,
        transmitted,
        spin_remainder: spin.iter().fold(T::zero(), |a, c| a + c.norm_sqr()),
        final_state: psi,
        max_norm_error: max_err,
    })
}

/// Periodic box long enough that neither the transmitted pulse nor the echo
/// wraps back into the medium or the echo read-out region.
pub fn box_length_for<T: Real>(input: &SampledEnvelope<T>, schedule: &ProtocolSchedule<T>, t_start: T, length: T, echo_duration: T) -> T {
    let pad = T::lit(5.0);
    let forward = schedule.t_inv - t_start + (input.t_end() - input.t_start());
    let backward = echo_duration + schedule.t2 - schedule.t_inv + length;
    forward.max(backward) + length + pad
}

/// Product-identity check of the two stage propagators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReversalReport {
    pub steps: usize,
    pub dt: f64,
    pub mirrored: bool,
    /// `‖Φ†·U_b·Φ·U_f·ψ₀ − ψ₀‖` for unit `ψ₀`.
    pub deviation: f64,
    pub max_norm_error: f64,
}

/// Time-dependent atomic detunings used by the reversal check: before
/// `t_inv` each detuning is `Δⱼ·(1 + a·sin(Ω(t − t₀)))`, after `t_inv` it is
/// the inverted mirror image `−Δⱼ(2t_inv − t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningDrive {
    pub amplitude: f64,
    pub frequency: f64,
}

impl DetuningDrive {
    fn forward<T: Real>(&self, base: T, t: T, t0: T) -> T {
        base * (T::one() + T::lit(self.amplitude) * (T::lit(self.frequency) * (t - t0)).sin())
    }
}

/// Runs the check for any schedule; a broken mirror is reported, not rejected.
///
/// Forward step `m` uses `H_f(t₀ + m·Δt)` and backward step `k` uses
/// `H_b(t₂ + k·Δt)`, the literal product of step exponentials. `Φ` maps
/// forward modes to backward modes and flips the sign of atom amplitudes.
pub fn reversal_deviation<T: Real>(
    system: &DiscreteSystem<T>,
    schedule: &ProtocolSchedule<T>,
    drive: DetuningDrive,
    steps: usize,
) -> Result<ReversalReport> {
    if steps == 0 {
        return Err(Error::param("steps", "need at least one step"));
    }
    let t0 = system.t_start;
    if !(schedule.t1 > t0 && schedule.t_inv > schedule.t1 && schedule.t2 > schedule.t_inv) {
        return Err(Error::Schedule("need t0 < t1 < t_inv < t2".into()));
    }
    let nm = system.n_modes();
    let dt = (schedule.t1 - t0) / T::from_usize_lossy(steps);
    let psi0: Vec<Complex<T>> = {
        let n = system.norm_sqr().sqrt();
        if !(n > T::zero()) {
            return Err(Error::ZeroEnergy);
        }
        system.state.iter().map(|c| *c / n).collect()
    };
    let mut psi = psi0.clone();
    let mut max_err = T::zero();
    let mut track = |psi: &[Complex<T>]| {
        let n = psi.iter().fold(T::zero(), |a, c| a + c.norm_sqr());
        max_err = max_err.max((n - T::one()).abs());
    };
    let det_at = |t: T| -> Vec<T> { system.atom_detunings.iter().map(|&x| drive.forward(x, t, t0)).collect() };
    for m in 0..steps {
        let t = t0 + dt * T::from_usize_lossy(m);
        let u = propagator(&system.hamiltonian(T::one(), &det_at(t)), dt)?;
        psi = u.matvec(&psi);
        track(&psi);
    }
    psi[nm..].iter_mut().for_each(|c| *c = -*c);
    let two_inv = T::lit(2.0) * schedule.t_inv;
    for k in 0..steps {
        let t = schedule.t2 + dt * T::from_usize_lossy(k);
        let det: Vec<T> = det_at(two_inv - t).into_iter().map(|x| -x).collect();
        let u = propagator(&system.hamiltonian(-T::one(), &det), dt)?;
        psi = u.matvec(&psi);
        track(&psi);
    }
    psi[nm..].iter_mut().for_each(|c| *c = -*c);
    let deviation = psi.iter().zip(&psi0).fold(T::zero(), |a, (x, y)| a + (*x - *y).norm_sqr()).sqrt();
    let scale = T::one().max(schedule.t2.abs());
    Ok(ReversalReport {
        steps,
        dt: dt.as_f64(),
        mirrored: schedule.mirror_error().abs() <= T::lit(1e-9) * scale,
        deviation: deviation.as_f64(),
        max_norm_error: max_err.as_f64(),
    })
}

/// [`reversal_deviation`] restricted to exactly mirrored schedules.
pub fn verify_reversal_identity<T: Real>(
    system: &DiscreteSystem<T>,
    schedule: &ProtocolSchedule<T>,
    drive: DetuningDrive,
    steps: usize,
) -> Result<ReversalReport> {
    schedule.validate()?;
    reversal_deviation(system, schedule, drive, steps)
}

/// Least-squares slope of `log(deviation)` against `log(dt)`.
pub fn convergence_order(reports: &[ReversalReport]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.deviation > 0.0)
        .map(|r| (r.dt.ln(), r.deviation.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
