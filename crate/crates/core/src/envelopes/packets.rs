use num_complex::Complex;

use super::envelope::{SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::real::{cis, Real};

/// Default minimum `τ·δω` below which two packets are reported as overlapping.
pub const DEFAULT_SEPARATION_THRESHOLD: f64 = 6.0;

/// Unit-energy Gaussian `√(δω/√π)·exp{−½[(t−t_c)δω]²}` evaluated at `t`.
pub(crate) fn unit_gaussian<T: Real>(t: T, t_center: T, delta_omega: T) -> T {
    let x = (t - t_center) * delta_omega;
    (delta_omega / T::PI().sqrt()).sqrt() * (-T::lit(0.5) * x * x).exp()
}

fn check_support<T: Real>(grid: &TimeGrid<T>, t_center: T, delta_omega: T) -> Result<()> {
    let half = T::lit(6.0) / delta_omega;
    if t_center - half < grid.t_start || t_center + half > grid.t_end() {
        return Err(Error::GridTooNarrow(format!(
            "Gaussian at {t_center} with width 1/{delta_omega} needs [{}, {}], grid is [{}, {}]",
            t_center - half,
            t_center + half,
            grid.t_start,
            grid.t_end()
        )));
    }
    Ok(())
}

/// Gaussian packet `amplitude·exp{−½[(t−t_c)δω]²}·e^{iφ}`, normalized so the
/// sampled energy equals `amplitude²`.
pub fn make_gaussian<T: Real>(
    grid: TimeGrid<T>,
    delta_omega: T,
    t_center: T,
    phase: T,
    amplitude: T,
) -> Result<SampledEnvelope<T>> {
    if !(delta_omega > T::zero()) {
        return Err(Error::param("delta_omega", "must be positive"));
    }
    check_support(&grid, t_center, delta_omega)?;
    let shape = SampledEnvelope::from_fn(grid, |t| {
        Complex::new(unit_gaussian(t, t_center, delta_omega), T::zero())
    })?;
    let e = shape.energy();
    let norm = amplitude / e.sqrt();
    Ok(shape.scaled(cis(phase) * norm))
}

/// Reported when the two packets of a double packet are not well separated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapWarning {
    pub separation: f64,
    pub threshold: f64,
    /// `e^{−(τδω)²/4}`: inner product of the two unit packets.
    pub overlap: f64,
}

/// Single photon in a superposition of two delayed Gaussian packets.
#[derive(Clone, Debug)]
pub struct DoublePacket<T> {
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub tau: T,
    pub phi1: T,
    pub phi2: T,
    pub delta_omega: T,
    /// Center of the first packet.
    pub t_center: T,
    pub separation_threshold: T,
}

impl<T: Real> DoublePacket<T> {
    pub fn new(alpha: Complex<T>, beta: Complex<T>, tau: T, phi1: T, phi2: T, delta_omega: T) -> Self {
        Self {
            alpha,
            beta,
            tau,
            phi1,
            phi2,
            delta_omega,
            t_center: T::zero(),
            separation_threshold: T::lit(DEFAULT_SEPARATION_THRESHOLD),
        }
    }

    pub fn centered_at(mut self, t_center: T) -> Self {
        self.t_center = t_center;
        self
    }

    pub fn build(&self, grid: TimeGrid<T>) -> Result<(SampledEnvelope<T>, Option<OverlapWarning>)> {
        if !(self.tau > T::zero()) {
            return Err(Error::param("tau", "must be positive"));
        }
        if !(self.delta_omega > T::zero()) {
            return Err(Error::param("delta_omega", "must be positive"));
        }
        let weight = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if weight > T::one() + T::lit(1e-12) {
            return Err(Error::param("alpha, beta", format!("|α|²+|β|² = {weight} exceeds 1")));
        }
        check_support(&grid, self.t_center, self.delta_omega)?;
        check_support(&grid, self.t_center + self.tau, self.delta_omega)?;
        let (t1, t2, dw) = (self.t_center, self.t_center + self.tau, self.delta_omega);
        let a = self.alpha * cis(self.phi1);
        let b = self.beta * cis(self.phi2);
        let env = SampledEnvelope::from_fn(grid, |t| {
            a * unit_gaussian(t, t1, dw) + b * unit_gaussian(t, t2, dw)
        })?;
        let separation = self.tau * self.delta_omega;
        let warning = (separation < self.separation_threshold).then(|| {
            let s = separation.as_f64();
            OverlapWarning {
                separation: s,
                threshold: self.separation_threshold.as_f64(),
                overlap: (-s * s / 4.0).exp(),
            }
        });
        Ok((env, warning))
    }
}

/// Two Gaussian packets with amplitudes α, β and phases φ₁, φ₂, the second
/// delayed by τ; the first is centered at `t = 0`.
pub fn make_double_packet<T: Real>(
    grid: TimeGrid<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
    tau: T,
    phi1: T,
    phi2: T,
    delta_omega: T,
) -> Result<(SampledEnvelope<T>, Option<OverlapWarning>)> {
    DoublePacket::new(alpha, beta, tau, phi1, phi2, delta_omega).build(grid)
}
