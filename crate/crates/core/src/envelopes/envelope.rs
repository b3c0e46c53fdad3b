use num_complex::Complex;

use super::resample::{resample, DEFAULT_TAPS};
use crate::error::{Error, Result};
use crate::real::{cis, Real};

/// A uniform time grid `t_i = t_start + i·dt`, `i < len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    pub t_start: T,
    pub dt: T,
    pub len: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(t_start: T, dt: T, len: usize) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::param("dt", format!("must be positive and finite, got {dt}")));
        }
        if !t_start.is_finite() {
            return Err(Error::param("t_start", "must be finite"));
        }
        Ok(Self { t_start, dt, len })
    }

    /// Grid covering `[from, to]` inclusive of both ends (to within one step).
    pub fn spanning(from: T, to: T, dt: T) -> Result<Self> {
        if !(to > from) {
            return Err(Error::param("to", "must exceed from"));
        }
        let n = ((to - from) / dt).round().to_usize().unwrap_or(0) + 1;
        Self::new(from, dt, n)
    }

    pub fn time(&self, i: usize) -> T {
        self.t_start + self.dt * T::from_usize_lossy(i)
    }

    pub fn t_end(&self) -> T {
        self.time(self.len.saturating_sub(1))
    }

    /// Fractional sample index of time `t`.
    pub fn position(&self, t: T) -> T {
        (t - self.t_start) / self.dt
    }

    /// Whether another grid shares the spacing and an integer sample offset.
    pub fn commensurate_with(&self, other: &TimeGrid<T>) -> Option<isize> {
        let tol = T::lit(1e-9);
        if ((self.dt - other.dt) / self.dt).abs() > tol {
            return None;
        }
        let shift = (other.t_start - self.t_start) / self.dt;
        let rounded = shift.round();
        if (shift - rounded).abs() > T::lit(1e-6) {
            return None;
        }
        rounded.to_isize()
    }
}

/// Complex envelope samples on a uniform grid.
///
/// Energy is `Σ|aᵢ|²·dt` in excitation-number units.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledEnvelope<T> {
    grid: TimeGrid<T>,
    samples: Vec<Complex<T>>,
    carrier_phase: T,
}

impl<T: Real> SampledEnvelope<T> {
    pub fn new(t_start: T, dt: T, samples: Vec<Complex<T>>) -> Result<Self> {
        let grid = TimeGrid::new(t_start, dt, samples.len())?;
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::param("samples", "all samples must be finite"));
        }
        Ok(Self { grid, samples, carrier_phase: T::zero() })
    }

    pub fn zeros(grid: TimeGrid<T>) -> Self {
        Self { grid, samples: vec![Complex::new(T::zero(), T::zero()); grid.len], carrier_phase: T::zero() }
    }

    /// Samples `f(t)` on `grid`.
    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let samples = (0..grid.len).map(|i| f(grid.time(i))).collect();
        Self::new(grid.t_start, grid.dt, samples)
    }

    pub fn with_carrier_phase(mut self, phase: T) -> Self {
        self.carrier_phase = phase;
        self
    }

    pub fn grid(&self) -> TimeGrid<T> {
        self.grid
    }

    pub fn t_start(&self) -> T {
        self.grid.t_start
    }

    pub fn dt(&self) -> T {
        self.grid.dt
    }

    pub fn t_end(&self) -> T {
        self.grid.t_end()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn carrier_phase(&self) -> T {
        self.carrier_phase
    }

    pub fn time(&self, i: usize) -> T {
        self.grid.time(i)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(move |i| self.grid.time(i))
    }

    pub fn energy(&self) -> T {
        self.samples.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr()) * self.grid.dt
    }

    /// Energy carried by samples with `from <= t <= to`.
    pub fn energy_between(&self, from: T, to: T) -> T {
        self.samples
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let t = self.grid.time(*i);
                t >= from && t <= to
            })
            .fold(T::zero(), |acc, (_, s)| acc + s.norm_sqr())
            * self.grid.dt
    }

    /// Energy-weighted mean time and rms duration.
    pub fn centroid_and_width(&self) -> Option<(T, T)> {
        let e: T = self.samples.iter().fold(T::zero(), |a, s| a + s.norm_sqr());
        if e <= T::zero() {
            return None;
        }
        let mean = self
            .samples
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (i, s)| a + s.norm_sqr() * self.grid.time(i))
            / e;
        let var = self
            .samples
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (i, s)| {
                let d = self.grid.time(i) - mean;
                a + s.norm_sqr() * d * d
            })
            / e;
        Some((mean, var.sqrt()))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| *s = *s * factor);
        out
    }

    /// Multiplies by `e^{iθ}`.
    pub fn phase_shifted(&self, theta: T) -> Self {
        self.scaled(cis(theta))
    }

    /// Same samples with the time axis moved by `shift`.
    pub fn delayed(&self, shift: T) -> Self {
        let mut out = self.clone();
        out.grid.t_start = out.grid.t_start + shift;
        out
    }

    /// Sample `t -> 2·pivot - t`. Energy and carrier phase are unchanged.
    pub fn time_reverse(&self, pivot: T) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        let t_start = T::lit(2.0) * pivot - self.t_end();
        Self { grid: TimeGrid { t_start, ..self.grid }, samples, carrier_phase: self.carrier_phase }
    }

    /// Zero-padded or cropped copy on `grid`, which must be commensurate.
    pub fn on_grid(&self, grid: TimeGrid<T>) -> Result<Self> {
        let Some(offset) = self.grid.commensurate_with(&grid) else {
            return resample(self, grid, DEFAULT_TAPS);
        };
        let mut out = Self::zeros(grid).with_carrier_phase(self.carrier_phase);
        for (j, slot) in out.samples.iter_mut().enumerate() {
            let i = j as isize + offset;
            if i >= 0 && (i as usize) < self.samples.len() {
                *slot = self.samples[i as usize];
            }
        }
        Ok(out)
    }

    /// Smallest grid (same spacing as `self`) covering both envelopes.
    pub fn union_grid(&self, other: &Self) -> Result<TimeGrid<T>> {
        if self.grid.commensurate_with(&other.grid).is_none() {
            return Err(Error::GridMismatch("union of non-commensurate grids".into()));
        }
        let start = self.t_start().min(other.t_start());
        let end = self.t_end().max(other.t_end());
        TimeGrid::spanning(start, end, self.dt())
    }

    /// Pointwise sum on the union grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let grid = self.union_grid(other)?;
        let mut a = self.on_grid(grid)?;
        let b = other.on_grid(grid)?;
        a.samples.iter_mut().zip(b.samples.iter()).for_each(|(x, y)| *x = *x + *y);
        Ok(a)
    }

    /// Linear interpolation of the envelope at time `t` (zero outside the grid).
    pub fn value_at(&self, t: T) -> Complex<T> {
        let x = self.grid.position(t);
        if x < T::zero() || x > T::from_usize_lossy(self.len().saturating_sub(1)) {
            return Complex::new(T::zero(), T::zero());
        }
        let i = x.floor().to_usize().unwrap_or(0);
        if i + 1 >= self.len() {
            return self.samples[self.len() - 1];
        }
        let f = x - T::from_usize_lossy(i);
        self.samples[i] * (T::one() - f) + self.samples[i + 1] * f
    }

    /// Power spectrum `(ω, |F(ω)|²)`, sorted by ω, with `Σ|F|²·Δω/(2π) = energy`.
    /// ω is the detuning from the carrier: a component `e^{-iωt}` appears at +ω.
    pub fn power_spectrum(&self) -> Vec<(T, T)> {
        use rustfft::FftPlanner;
        let n = self.len();
        if n == 0 {
            return Vec::new();
        }
        let mut buf = self.samples.clone();
        let mut planner = FftPlanner::<T>::new();
        planner.plan_fft_forward(n).process(&mut buf);
        let dt = self.dt();
        let dw = T::TAU() / (dt * T::from_usize_lossy(n));
        let mut out: Vec<(T, T)> = buf
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let kk = if k <= n / 2 { k as isize } else { k as isize - n as isize };
                // FFT uses e^{-iωt}; envelopes use e^{-iωt} for positive detuning, so flip.
                let w = -T::from_isize(kk).unwrap() * dw;
                (w, c.norm_sqr() * dt * dt)
            })
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }
}

/// `Σ a*ᵢ bᵢ dt`. Non-commensurate `b` is resampled onto `a`'s grid.
pub fn overlap<T: Real>(a: &SampledEnvelope<T>, b: &SampledEnvelope<T>) -> Result<Complex<T>> {
    let b = if a.grid().commensurate_with(&b.grid()).is_some() {
        std::borrow::Cow::Borrowed(b)
    } else {
        std::borrow::Cow::Owned(resample(b, a.grid(), DEFAULT_TAPS)?)
    };
    let offset = a.grid().commensurate_with(&b.grid()).expect("commensurate after resampling");
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, x) in a.samples().iter().enumerate() {
        let j = i as isize - offset;
        if j >= 0 && (j as usize) < b.len() {
            acc = acc + x.conj() * b.samples()[j as usize];
        }
    }
    Ok(acc * a.dt())
}

/// `|⟨a,b⟩|² / (E_a E_b)`, in `[0, 1]`.
pub fn fidelity<T: Real>(a: &SampledEnvelope<T>, b: &SampledEnvelope<T>) -> Result<T> {
    let (ea, eb) = (a.energy(), b.energy());
    if !(ea > T::zero()) || !(eb > T::zero()) {
        return Err(Error::ZeroEnergy);
    }
    let ov = overlap(a, b)?;
    Ok((ov.norm_sqr() / (ea * eb)).min(T::one()))
}
