//! Three-pulse photon-echo quantum memory with controlled reversible
//! inhomogeneous broadening (CRIB).
//!
//! The crate provides
//! * [`envelopes`]: sampled complex field envelopes and their algebra,
//! * [`ideal_map`]: the exact lossless memory channel (time reversal plus a
//!   per-photon phase `e^{-iχ₁₂}`),
//! * [`medium`]: the discretized inhomogeneously broadened ensemble,
//! * [`solver`]: single-excitation light–atom propagation in retarded time,
//! * [`oracle`]: brute-force Hamiltonian evolution used to certify the solver,
//! * [`timebin`] and [`interferometer`]: time-bin qubits and the double-pass
//!   Mach–Zehnder measurement built on top of a memory backend.
//!
//! Every numerical type is generic over the scalar [`Real`] (`f32` or `f64`).
//! The `f64` aliases below are what applications normally use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod envelopes;
pub mod error;
pub mod ideal_map;
pub mod interferometer;
pub mod linalg;
pub mod medium;
pub mod memory;
pub mod oracle;
pub mod real;
pub mod schedule;
pub mod solver;
pub mod timebin;

pub use error::{Error, Result};
pub use real::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type Envelope = envelopes::SampledEnvelope<f64>;
pub type Grid = envelopes::TimeGrid<f64>;
pub type Medium = medium::AtomicMedium<f64>;
pub type Coherence = medium::CoherenceField<f64>;
pub type Schedule = schedule::ProtocolSchedule<f64>;
pub type Qubit = timebin::TimeBinQubit<f64>;
pub type Mz = interferometer::MzConfig<f64>;
pub type PhotonBlock = ideal_map::NPhotonAmplitude<f64>;
pub type PhotonState = ideal_map::MultiPhotonState<f64>;
