//! Comparison of two `t,re,im` traces.

use std::fs;
use std::path::Path;

use crib_core::envelopes::{fidelity, overlap, parse_csv, SampledEnvelope};
use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub fidelity: f64,
    /// Largest `|a(t) − b(t)|` on the grid of `a`.
    pub max_abs_deviation: f64,
    /// `arg ⟨a, b⟩`.
    pub overlap_phase: f64,
    pub energy_a: f64,
    pub energy_b: f64,
    pub tol: f64,
    pub pass: bool,
}

fn load(path: &Path) -> Result<SampledEnvelope<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    parse_csv(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
}

/// Puts `b` on the grid of `a` and passes when `1 − F ≤ tol`.
pub fn compare(a: &Path, b: &Path, tol: f64) -> Result<Comparison, CliError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(CliError::Schema("--tol must be non-negative".into()));
    }
    let (a, b) = (load(a)?, load(b)?);
    if b.t_start() > a.t_end() || a.t_start() > b.t_end() {
        return Err(CliError::Runtime("the two traces do not overlap in time".into()));
    }
    let b_on_a = b.on_grid(a.grid())?;
    let fid = fidelity(&a, &b)?;
    let max_abs_deviation =
        a.samples().iter().zip(b_on_a.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Ok(Comparison {
        fidelity: fid,
        max_abs_deviation,
        overlap_phase: overlap(&a, &b)?.arg(),
        energy_a: a.energy(),
        energy_b: b.energy(),
        tol,
        pass: 1.0 - fid <= tol,
    })
}
