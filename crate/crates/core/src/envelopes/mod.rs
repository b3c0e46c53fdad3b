//! Complex slowly-varying field envelopes on uniform time grids.
//!
//! Time is measured in units of the inverse inhomogeneous linewidth. The
//! optical carrier is never sampled: its phase is carried alongside the
//! samples as `carrier_phase` metadata.

mod envelope;
mod io;
mod packets;
mod resample;

pub use envelope::{fidelity, overlap, SampledEnvelope, TimeGrid};
pub use io::{parse_csv, read_csv, to_csv_string, write_csv};
pub use packets::{
    make_double_packet, make_gaussian, DoublePacket, OverlapWarning, DEFAULT_SEPARATION_THRESHOLD,
};
pub use resample::{resample, DEFAULT_TAPS};
