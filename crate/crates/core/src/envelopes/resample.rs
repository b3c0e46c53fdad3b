use num_complex::Complex;

use super::envelope::{SampledEnvelope, TimeGrid};
use crate::error::{Error, Result};
use crate::real::Real;

/// Default kernel length of the band-limited interpolator.
pub const DEFAULT_TAPS: usize = 32;

fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-12) {
        T::one()
    } else {
        let px = T::PI() * x;
        px.sin() / px
    }
}

/// Kaiser shape parameter; stopband near -150 dB.
const KAISER_BETA: f64 = 16.0;

/// Zeroth-order modified Bessel function by its power series.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window on `[-half, half]`.
fn kaiser<T: Real>(x: T, half: T) -> T {
    let r = (x / half).as_f64();
    if r.abs() >= 1.0 {
        return T::zero();
    }
    T::lit(bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / bessel_i0(KAISER_BETA))
}

/// Interpolates `env` onto `target` with a Kaiser-windowed sinc of `taps`
/// points. When the target is coarser than the source the kernel is widened
/// to low-pass at the target Nyquist rate. Samples outside the source are zero.
/// For pulses well inside the band, energy is kept to about 1e-8 at the default length.
pub fn resample<T: Real>(env: &SampledEnvelope<T>, target: TimeGrid<T>, taps: usize) -> Result<SampledEnvelope<T>> {
    if taps < 2 || !taps.is_multiple_of(2) {
        return Err(Error::param("taps", "must be an even number >= 2"));
    }
    let src = env.grid();
    let ratio = (target.dt / src.dt).max(T::one());
    let half = T::from_usize_lossy(taps / 2) * ratio;
    let reach = half.ceil().to_isize().unwrap_or(0);
    let samples = env.samples();
    let out = (0..target.len)
        .map(|j| {
            let x = src.position(target.time(j));
            let centre = x.floor().to_isize().unwrap_or(0);
            let mut acc = Complex::new(T::zero(), T::zero());
            let mut wsum = T::zero();
            for i in (centre - reach + 1)..=(centre + reach) {
                let d = x - T::from_isize(i).unwrap();
                let w = sinc(d / ratio) * kaiser(d, half) / ratio;
                wsum = wsum + w;
                if i >= 0 && (i as usize) < samples.len() {
                    acc = acc + samples[i as usize] * w;
                }
            }
            // Unity DC gain.
            if wsum.abs() > T::lit(1e-12) {
                acc / wsum
            } else {
                acc
            }
        })
        .collect();
    Ok(SampledEnvelope::new(target.t_start, target.dt, out)?.with_carrier_phase(env.carrier_phase()))
}
