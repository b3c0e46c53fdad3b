//! Time-bin qubits `r|0⟩ + √(1−r²)e^{iφ}|1⟩`, where `|0⟩` is the early bin
//! `f(t)` and `|1⟩` the late bin `f(t−τ)`.
//!
//! A reversing memory swaps which bin each amplitude occupies. With the
//! relabelled output bin `g(t) = f(2P − τ − t)` the retrieved field is
//! `e^{−iχ₁₂}·[√(1−r²)e^{iφ}·g(t) + r·g(t−τ)]`: the amplitude that entered
//! early leaves late and keeps its phase, the one that entered late leaves
//! early and still carries `e^{iφ}`. In canonical form this is the qubit
//! `(√(1−r²), −φ)`; [`Transformed`] reports both readings.
//!
//! If an experiment instead relabels bins by their input order after the
//! memory, the transform is the identity up to phase.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::envelopes::{make_gaussian, overlap, SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::memory::{shifted_onto, MemoryBackend};
use crate::real::{cis, wrap_phase, Real};

/// Largest allowed `|⟨f(t), f(t−τ)⟩|`.
pub const DEFAULT_BIN_OVERLAP: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct TimeBinQubit<T> {
    pub r: T,
    pub phi: T,
    pub tau: T,
    /// Early-bin shape `f`, unit energy. Its grid must also hold `f(t−τ)`.
    pub bin: SampledEnvelope<T>,
}

/// Qubit section of a scenario config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitSpec {
    pub r: f64,
    pub phi: f64,
    pub tau: f64,
    pub bin: BinSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinSpec {
    pub delta_omega: f64,
    #[serde(default)]
    pub t_center: f64,
    #[serde(default = "BinSpec::default_dt")]
    pub dt: f64,
}

impl BinSpec {
    fn default_dt() -> f64 {
        0.1
    }
}

impl QubitSpec {
    pub fn build<T: Real>(&self) -> Result<TimeBinQubit<T>> {
        TimeBinQubit::gaussian(
            T::lit(self.r),
            T::lit(self.phi),
            T::lit(self.tau),
            T::lit(self.bin.delta_omega),
            T::lit(self.bin.t_center),
            T::lit(self.bin.dt),
        )
    }
}

impl<T: Real> TimeBinQubit<T> {
    pub fn new(r: T, phi: T, tau: T, bin: SampledEnvelope<T>) -> Result<Self> {
        if !(r >= T::zero() && r <= T::one()) {
            return Err(Error::param("r", "must lie in [0, 1]"));
        }
        if !(tau > T::zero()) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        let e = bin.energy();
        if !(e > T::zero()) {
            return Err(Error::ZeroEnergy);
        }
        let bin = bin.scaled(Complex::new(T::one() / e.sqrt(), T::zero()));
        Ok(Self { r, phi, tau, bin })
    }

    /// Gaussian bins `f ∝ exp{−½[(t−t_c)δω]²}` on a grid holding both bins
    /// with seven standard deviations to spare.
    pub fn gaussian(r: T, phi: T, tau: T, delta_omega: T, t_center: T, dt: T) -> Result<Self> {
        if !(delta_omega > T::zero()) || !(tau > T::zero()) {
            return Err(Error::param("delta_omega", "bin width and separation must be positive"));
        }
        let margin = T::lit(7.0) / delta_omega;
        let grid = TimeGrid::spanning(t_center - margin, t_center + tau + margin, dt)?;
        let bin = make_gaussian(grid, delta_omega, t_center, T::zero(), T::one())?;
        Self::new(r, phi, tau, bin)
    }

    pub fn late_bin(&self) -> Result<SampledEnvelope<T>> {
        shifted_onto(&self.bin, self.tau, self.bin.grid())
    }

    /// `|⟨f(t), f(t−τ)⟩|`.
    pub fn bin_overlap(&self) -> Result<T> {
        Ok(overlap(&self.bin, &self.late_bin()?)?.norm())
    }

    /// Amplitudes of `|0⟩` and `|1⟩`.
    pub fn amplitudes(&self) -> (Complex<T>, Complex<T>) {
        let s = (T::one() - self.r * self.r).max(T::zero()).sqrt();
        (Complex::new(self.r, T::zero()), cis(self.phi) * s)
    }

    /// `|⟨q₁|q₂⟩|²` between the two-level states.
    pub fn state_fidelity(&self, other: &Self) -> T {
        let (a0, a1) = self.amplitudes();
        let (b0, b1) = other.amplitudes();
        (a0.conj() * b0 + a1.conj() * b1).norm_sqr()
    }
}

/// `r·f(t) + √(1−r²)e^{iφ}·f(t−τ)` on the bin grid.
pub fn encode<T: Real>(q: &TimeBinQubit<T>) -> Result<SampledEnvelope<T>> {
    encode_with_threshold(q, T::lit(DEFAULT_BIN_OVERLAP))
}

pub fn encode_with_threshold<T: Real>(q: &TimeBinQubit<T>, max_overlap: T) -> Result<SampledEnvelope<T>> {
    let late = q.late_bin()?;
    let lost = T::one() - late.energy();
    if lost > T::lit(1e-10) {
        return Err(Error::GridTooNarrow(format!("late bin loses {} of its energy off the grid", lost.as_f64())));
    }
    let ov = overlap(&q.bin, &late)?.norm();
    if ov > max_overlap {
        return Err(Error::param("tau", format!("bin overlap {} exceeds {}", ov.as_f64(), max_overlap.as_f64())));
    }
    let (a0, a1) = q.amplitudes();
    let mut out = q.bin.scaled(a0);
    for (o, l) in out.samples_mut().iter_mut().zip(late.samples()) {
        *o = *o + *l * a1;
    }
    Ok(out)
}

/// Projection of an envelope onto the two-bin subspace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decoded {
    pub r: f64,
    pub phi: f64,
    /// Energy outside the two-bin subspace.
    pub residual: f64,
    /// `false` when one projection vanishes and `phi` is reported as 0.
    pub phase_valid: bool,
    /// Phase of the early-bin amplitude, or of the late one when the early is empty.
    pub global_phase: f64,
    /// Energy of the projection onto the two-bin subspace.
    pub captured: f64,
    /// Bin amplitudes `(c₀, c₁)` with `ψ ≈ c₀f(t) + c₁f(t−τ)`.
    pub amplitudes: [[f64; 2]; 2],
}

/// `r`, `φ` and residual of `env` in the bins `f(t)`, `f(t−τ)`.
pub fn decode<T: Real>(env: &SampledEnvelope<T>, tau: T, bin_envelope: &SampledEnvelope<T>) -> Result<Decoded> {
    let e = env.energy();
    if !(e > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    let eb = bin_envelope.energy();
    if !(eb > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    let f = bin_envelope.scaled(Complex::new(T::one() / eb.sqrt(), T::zero()));
    let late = f.delayed(tau);
    let p0 = overlap(&f, env)?;
    let p1 = overlap(&late, env)?;
    // Bins are nearly but not exactly orthogonal: solve the 2×2 Gram system.
    let s01 = overlap(&f, &late)?;
    let det = T::one() - s01.norm_sqr();
    if !(det > T::lit(1e-6)) {
        return Err(Error::param("tau", "bins are not separable"));
    }
    let a0 = (p0 - s01 * p1) / det;
    let a1 = (p1 - s01.conj() * p0) / det;
    let captured = (a0.conj() * p0 + a1.conj() * p1).re;
    if captured <= T::lit(1e-12) * e {
        return Err(Error::DegenerateProjection);
    }
    let norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
    let r = a0.norm() / norm;
    let tiny = T::lit(1e-9) * norm;
    let phase_valid = a0.norm() > tiny && a1.norm() > tiny;
    let phi = if phase_valid { wrap_phase(a1.arg() - a0.arg()) } else { T::zero() };
    let global_phase = if a0.norm() > tiny { a0.arg() } else { a1.arg() };
    Ok(Decoded {
        r: r.as_f64(),
        phi: phi.as_f64(),
        residual: (e - captured).max(T::zero()).as_f64(),
        phase_valid,
        global_phase: global_phase.as_f64(),
        captured: captured.as_f64(),
        amplitudes: [[a0.re.as_f64(), a0.im.as_f64()], [a1.re.as_f64(), a1.im.as_f64()]],
    })
}

/// Outcome of sending a qubit through a memory.
#[derive(Clone, Debug)]
pub struct Transformed<T> {
    /// Canonical qubit in the relabelled output bins `g(t)`, `g(t−τ)`.
    pub qubit: TimeBinQubit<T>,
    pub output: SampledEnvelope<T>,
    pub diagnostics: TransformDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformDiagnostics {
    pub backend: &'static str,
    /// Modulus of the amplitude now in the late bin: the input `r`.
    pub carried_r: f64,
    /// Phase of the early output amplitude relative to the late one: the input `φ`.
    pub carried_phi: f64,
    /// Phase acquired by each packet, `−χ₁₂` for a reversing memory.
    pub global_phase: f64,
    pub efficiency: f64,
    /// Share of the retrieved energy inside the relabelled two-bin subspace.
    pub bin_fidelity: f64,
    pub residual: f64,
    pub phase_valid: bool,
}

/// Runs `q` through `backend` and decodes the result in the relabelled bins.
pub fn memory_transform<T: Real>(q: &TimeBinQubit<T>, backend: &dyn MemoryBackend<T>) -> Result<Transformed<T>> {
    let input = encode(q)?;
    let out = backend.transform(&input)?;
    // Early output bin: mirror image of the late input bin, or the early bin
    // itself for a non-reversing memory.
    let g = match out.pivot {
        Some(p) => q.bin.time_reverse(p - q.tau / T::lit(2.0)),
        None => {
            let shift = out.output.centroid_and_width().map(|c| c.0).unwrap_or(T::zero())
                - input.centroid_and_width().map(|c| c.0).unwrap_or(T::zero());
            q.bin.delayed(shift)
        }
    };
    let dec = decode(&out.output, q.tau, &g)?;
    let a_early = Complex::new(T::lit(dec.amplitudes[0][0]), T::lit(dec.amplitudes[0][1]));
    let a_late = Complex::new(T::lit(dec.amplitudes[1][0]), T::lit(dec.amplitudes[1][1]));
    let norm = (a_early.norm_sqr() + a_late.norm_sqr()).sqrt();
    let carried_phi = if dec.phase_valid { wrap_phase(a_early.arg() - a_late.arg()).as_f64() } else { 0.0 };
    let global_phase = if a_late.norm() > T::lit(1e-9) * norm {
        a_late.arg()
    } else {
        a_early.arg() - q.phi
    };
    let qubit = TimeBinQubit::new(T::lit(dec.r), T::lit(dec.phi), q.tau, g)?;
    Ok(Transformed {
        diagnostics: TransformDiagnostics {
            backend: backend.name(),
            carried_r: (a_late.norm() / norm).as_f64(),
            carried_phi,
            global_phase: wrap_phase(global_phase).as_f64(),
            efficiency: out.efficiency.as_f64(),
            bin_fidelity: dec.captured / out.output.energy().as_f64(),
            residual: dec.residual,
            phase_valid: dec.phase_valid,
        },
        output: out.output,
        qubit,
    })
}
