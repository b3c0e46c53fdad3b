//! The exact lossless memory channel.
//!
//! A photon entering the ideal memory leaves as the time-mirrored copy of its
//! input envelope, every photon picking up the phase `e^{-iχ₁₂}`. The map is
//! implemented in the time domain; [`spectrum_at`] and
//! [`ideal_retrieve_spectrum`] give the equivalent frequency-domain form.

use std::fs;
use std::path::Path;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelopes::{SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::real::{cis, Real};

/// Largest photon number held as a dense tensor.
pub const MAX_PHOTONS: usize = 3;
/// Largest grid length per tensor axis.
pub const MAX_AXIS_LEN: usize = 128;

/// Retrieved envelope for an input referenced to its grid start `t₀`: the
/// input is mirrored so that `t₀` maps onto `t_prime`, and multiplied by
/// `e^{-iχ₁₂}`.
pub fn ideal_retrieve_envelope<T: Real>(input: &SampledEnvelope<T>, chi12: T, t_prime: T) -> SampledEnvelope<T> {
    let pivot = T::lit(0.5) * (input.t_start() + t_prime);
    ideal_retrieve_about(input, chi12, pivot)
}

/// Retrieved envelope mirrored about `pivot`.
pub fn ideal_retrieve_about<T: Real>(input: &SampledEnvelope<T>, chi12: T, pivot: T) -> SampledEnvelope<T> {
    input.time_reverse(pivot).phase_shifted(-chi12)
}

/// `F(ω) = Σ aⱼ e^{iωtⱼ} dt` evaluated at each requested detuning.
pub fn spectrum_at<T: Real>(env: &SampledEnvelope<T>, omegas: &[T]) -> Vec<Complex<T>> {
    omegas
        .iter()
        .map(|&w| {
            env.samples()
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (j, a)| acc + *a * cis(w * env.time(j)))
                * env.dt()
        })
        .collect()
}

/// Frequency-domain form of the channel: `F'(ω) = e^{-iχ₁₂}·e^{2iωP}·F(−ω)`
/// for mirror time `P`. The backward mode at `−ω` inherits the forward
/// amplitude at `+ω`.
pub fn ideal_retrieve_spectrum<T: Real>(
    spectrum: impl Fn(T) -> Complex<T>,
    chi12: T,
    pivot: T,
) -> impl Fn(T) -> Complex<T> {
    move |w| spectrum(-w) * cis(T::lit(2.0) * w * pivot - chi12)
}

/// One `n`-photon block: the time-domain wavefunction `φₙ(tₙ,…,t₁)` sampled on
/// the same grid along every axis, stored row-major with `tₙ` slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct NPhotonAmplitude<T> {
    n: usize,
    grid: TimeGrid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> NPhotonAmplitude<T> {
    pub fn new(n: usize, grid: TimeGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if n == 0 || n > MAX_PHOTONS {
            return Err(Error::SizeLimit(format!("photon number {n} outside 1..={MAX_PHOTONS}")));
        }
        if grid.len == 0 || grid.len > MAX_AXIS_LEN {
            return Err(Error::SizeLimit(format!("axis length {} outside 1..={MAX_AXIS_LEN}", grid.len)));
        }
        if values.len() != grid.len.pow(n as u32) {
            return Err(Error::param("values", format!("expected {} entries", grid.len.pow(n as u32))));
        }
        Ok(Self { n, grid, values })
    }

    /// Symmetrized, unnormalized product `sym(f₁⊗…⊗fₙ)` of envelopes sharing one grid.
    pub fn symmetric_product(factors: &[SampledEnvelope<T>]) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::param("factors", "empty"))?;
        let grid = first.grid();
        if factors.iter().any(|f| f.grid() != grid) {
            return Err(Error::GridMismatch("product factors must share a grid".into()));
        }
        let n = factors.len();
        if n > MAX_PHOTONS || grid.len > MAX_AXIS_LEN {
            return Err(Error::SizeLimit(format!("{n} photons on {} points", grid.len)));
        }
        let total = grid.len.pow(n as u32);
        let mut block = Self::new(n, grid, vec![Complex::new(T::zero(), T::zero()); total])?;
        let perms = permutations(n);
        let scale = T::one() / T::from_usize_lossy(perms.len());
        for flat in 0..total {
            let idx = block.unflatten(flat);
            let mut acc = Complex::new(T::zero(), T::zero());
            for p in &perms {
                let mut term = Complex::new(T::one(), T::zero());
                for (axis, &f) in p.iter().enumerate() {
                    term = term * factors[f].samples()[idx[axis]];
                }
                acc = acc + term;
            }
            block.values[flat] = acc * scale;
        }
        Ok(block)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = *v * c);
        out
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let len = self.grid.len;
        let mut idx = vec![0; self.n];
        for axis in (0..self.n).rev() {
            idx[axis] = flat % len;
            flat /= len;
        }
        idx
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.grid.len + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex<T> {
        self.values[self.flatten(idx)]
    }

    /// `Σ|φₙ|²·dtⁿ`.
    pub fn norm_sqr(&self) -> T {
        let cell = self.grid.dt.powi(self.n as i32);
        self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr()) * cell
    }

    /// Largest `|φ(σ·idx) − φ(idx)|` over transpositions of neighbouring axes.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for flat in 0..self.values.len() {
            let idx = self.unflatten(flat);
            for a in 1..self.n {
                let mut swapped = idx.clone();
                swapped.swap(a - 1, a);
                let d = (self.values[flat] - self.values[self.flatten(&swapped)]).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Frequency-domain amplitude `Σ φ(t) e^{iΣωₘtₘ} dtⁿ` at one point.
    pub fn spectrum_at(&self, omegas: &[T]) -> Complex<T> {
        assert_eq!(omegas.len(), self.n);
        let cell = self.grid.dt.powi(self.n as i32);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (flat, v) in self.values.iter().enumerate() {
            let idx = self.unflatten(flat);
            let phase = idx.iter().zip(omegas).fold(T::zero(), |a, (&i, &w)| a + w * self.grid.time(i));
            acc = acc + *v * cis(phase);
        }
        acc * cell
    }

    /// Every axis mirrored about `pivot`, block phase `e^{-inχ₁₂}`.
    fn retrieved(&self, chi12: T, pivot: T) -> Self {
        let mut values = self.values.clone();
        // Reversing all axes of a row-major tensor reverses its flat storage.
        values.reverse();
        let phase = cis(-T::from_usize_lossy(self.n) * chi12);
        values.iter_mut().for_each(|v| *v = *v * phase);
        let grid = TimeGrid { t_start: T::lit(2.0) * pivot - self.grid.t_end(), ..self.grid };
        Self { n: self.n, grid, values }
    }
}

/// All permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Pure state of the input light: vacuum amplitude plus photon-number blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPhotonState<T> {
    pub vacuum: Complex<T>,
    pub blocks: Vec<NPhotonAmplitude<T>>,
}

impl<T: Real> MultiPhotonState<T> {
    pub fn new(vacuum: Complex<T>, blocks: Vec<NPhotonAmplitude<T>>) -> Result<Self> {
        let state = Self { vacuum, blocks };
        state.validate()?;
        Ok(state)
    }

    pub fn vacuum() -> Self {
        Self { vacuum: Complex::new(T::one(), T::zero()), blocks: Vec::new() }
    }

    /// `|φ₀|² + Σₙ Σ|φₙ|² dtⁿ`.
    pub fn norm_sqr(&self) -> T {
        self.blocks.iter().fold(self.vacuum.norm_sqr(), |a, b| a + b.norm_sqr())
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.norm_sqr();
        if (norm - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::param("state", format!("norm {norm} differs from 1")));
        }
        for b in &self.blocks {
            if b.max_asymmetry() > T::lit(1e-10) {
                return Err(Error::param("state", format!("{}-photon block is not exchange symmetric", b.n)));
            }
        }
        Ok(())
    }
}

/// Applies the ideal channel block by block: each axis is mirrored so that
/// the input grid start maps onto `t_prime`, and the `n`-photon block gains
/// `e^{-inχ₁₂}`. The vacuum amplitude is untouched.
pub fn ideal_retrieve_nphoton<T: Real>(state: &MultiPhotonState<T>, chi12: T, t_prime: T) -> MultiPhotonState<T> {
    let blocks = state
        .blocks
        .par_iter()
        .map(|b| b.retrieved(chi12, T::lit(0.5) * (b.grid.t_start + t_prime)))
        .collect();
    MultiPhotonState { vacuum: state.vacuum, blocks }
}

#[derive(Serialize, Deserialize)]
struct BlockHeader {
    n: usize,
    t_start: f64,
    dt: f64,
    len: usize,
    vacuum: [f64; 2],
    payload: String,
}

/// Writes `<stem>.json` (header) and `<stem>.csv` (payload rows
/// `i_n,…,i_1,re,im`). The vacuum amplitude travels in the header.
pub fn write_block<T: Real>(block: &NPhotonAmplitude<T>, vacuum: Complex<T>, stem: impl AsRef<Path>) -> Result<()> {
    let stem = stem.as_ref();
    let csv_path = stem.with_extension("csv");
    let header = BlockHeader {
        n: block.n,
        t_start: block.grid.t_start.as_f64(),
        dt: block.grid.dt.as_f64(),
        len: block.grid.len,
        vacuum: [vacuum.re.as_f64(), vacuum.im.as_f64()],
        payload: csv_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
    let mut out = String::new();
    let names: Vec<String> = (1..=block.n).rev().map(|a| format!("i{a}")).collect();
    out.push_str(&names.join(","));
    out.push_str(",re,im\n");
    for (flat, v) in block.values.iter().enumerate() {
        for i in block.unflatten(flat) {
            out.push_str(&format!("{i},"));
        }
        out.push_str(&format!("{:.17e},{:.17e}\n", v.re.as_f64(), v.im.as_f64()));
    }
    fs::write(csv_path, out)?;
    Ok(())
}

/// Reads a block written by [`write_block`]; returns it with the vacuum amplitude.
pub fn read_block<T: Real>(stem: impl AsRef<Path>) -> Result<(NPhotonAmplitude<T>, Complex<T>)> {
    let stem = stem.as_ref();
    let header: BlockHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
    let csv_path = stem.with_file_name(&header.payload);
    let text = fs::read_to_string(csv_path)?;
    let grid = TimeGrid::new(T::lit(header.t_start), T::lit(header.dt), header.len)?;
    let total = header.len.pow(header.n as u32);
    let mut values = vec![Complex::new(T::zero(), T::zero()); total];
    let mut seen = 0usize;
    for (row, line) in text.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.n + 2 {
            return Err(Error::Parse(format!("payload row {}: wrong column count", row + 2)));
        }
        let mut flat = 0usize;
        for f in &fields[..header.n] {
            let i: usize = f.trim().parse().map_err(|e| Error::Parse(format!("index: {e}")))?;
            if i >= header.len {
                return Err(Error::Parse(format!("index {i} out of range")));
            }
            flat = flat * header.len + i;
        }
        let re: f64 = fields[header.n].trim().parse().map_err(|e| Error::Parse(format!("re: {e}")))?;
        let im: f64 = fields[header.n + 1].trim().parse().map_err(|e| Error::Parse(format!("im: {e}")))?;
        values[flat] = Complex::new(T::lit(re), T::lit(im));
        seen += 1;
    }
    if seen != total {
        return Err(Error::Parse(format!("expected {total} payload rows, found {seen}")));
    }
    let block = NPhotonAmplitude::new(header.n, grid, values)?;
    Ok((block, Complex::new(T::lit(header.vacuum[0]), T::lit(header.vacuum[1]))))
}
