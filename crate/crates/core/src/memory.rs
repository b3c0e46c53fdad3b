//! Memory backends shared by the time-bin and interferometer layers.

use crate::envelopes::{SampledEnvelope, TimeGrid};
use crate::error::Result;
use crate::ideal_map::ideal_retrieve_about;
use crate::medium::AtomicMedium;
use crate::real::Real;
use crate::schedule::ProtocolSchedule;
use crate::solver::{run_protocol, ProtocolOptions, ProtocolReport};

/// What a memory returned for one input.
#[derive(Clone, Debug)]
pub struct MemoryOutput<T> {
    pub output: SampledEnvelope<T>,
    pub efficiency: T,
    /// Mirror time of the retrieval; `None` for non-reversing memories.
    pub pivot: Option<T>,
    pub chi12: T,
    pub fidelity_vs_ideal: Option<T>,
}

/// A linear, phase-covariant map from input to retrieved envelope.
pub trait MemoryBackend<T: Real>: Sync {
    fn name(&self) -> &'static str;

    fn transform(&self, input: &SampledEnvelope<T>) -> Result<MemoryOutput<T>>;
}

/// The exact channel: time reversal about `pivot` times `e^{−iχ₁₂}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealMemory<T> {
    pub chi12: T,
    pub pivot: T,
}

impl<T: Real> IdealMemory<T> {
    pub fn new(chi12: T, pivot: T) -> Self {
        Self { chi12, pivot }
    }

    pub fn from_schedule(schedule: &ProtocolSchedule<T>) -> Self {
        Self { chi12: schedule.chi12(), pivot: schedule.pivot() }
    }
}

impl<T: Real> MemoryBackend<T> for IdealMemory<T> {
    fn name(&self) -> &'static str {
        "ideal"
    }

    fn transform(&self, input: &SampledEnvelope<T>) -> Result<MemoryOutput<T>> {
        Ok(MemoryOutput {
            output: ideal_retrieve_about(input, self.chi12, self.pivot),
            efficiency: T::one(),
            pivot: Some(self.pivot),
            chi12: self.chi12,
            fidelity_vs_ideal: Some(T::one()),
        })
    }
}

/// Full propagation through the medium with [`run_protocol`].
#[derive(Clone, Debug)]
pub struct SolverMemory<T> {
    pub medium: AtomicMedium<T>,
    pub schedule: ProtocolSchedule<T>,
    pub decoherence_rate: T,
    pub options: ProtocolOptions<T>,
}

impl<T: Real> SolverMemory<T> {
    pub fn new(medium: AtomicMedium<T>, schedule: ProtocolSchedule<T>) -> Self {
        Self { medium, schedule, decoherence_rate: T::zero(), options: ProtocolOptions::default() }
    }

    pub fn run(&self, input: &SampledEnvelope<T>) -> Result<ProtocolReport<T>> {
        run_protocol(input, &self.medium, &self.schedule, self.decoherence_rate, &self.options)
    }
}

impl<T: Real> MemoryBackend<T> for SolverMemory<T> {
    fn name(&self) -> &'static str {
        "solver"
    }

    fn transform(&self, input: &SampledEnvelope<T>) -> Result<MemoryOutput<T>> {
        let report = self.run(input)?;
        Ok(MemoryOutput {
            output: report.echo,
            efficiency: report.efficiency,
            pivot: Some(report.schedule.pivot()),
            chi12: report.chi12,
            fidelity_vs_ideal: Some(report.fidelity_vs_ideal),
        })
    }
}

/// A lossless fiber delay: no reversal, no phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlainDelay<T> {
    pub delay: T,
}

impl<T: Real> MemoryBackend<T> for PlainDelay<T> {
    fn name(&self) -> &'static str {
        "plain-delay"
    }

    fn transform(&self, input: &SampledEnvelope<T>) -> Result<MemoryOutput<T>> {
        Ok(MemoryOutput {
            output: input.delayed(self.delay),
            efficiency: T::one(),
            pivot: None,
            chi12: T::zero(),
            fidelity_vs_ideal: None,
        })
    }
}

/// Envelope `env(t − shift)` sampled on `grid`. Integer-step shifts are exact;
/// others go through the band-limited resampler.
pub fn shifted_onto<T: Real>(env: &SampledEnvelope<T>, shift: T, grid: TimeGrid<T>) -> Result<SampledEnvelope<T>> {
    env.delayed(shift).on_grid(grid)
}
