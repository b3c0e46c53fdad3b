//! The discretized inhomogeneously broadened ensemble.
//!
//! Detunings are in units of the inhomogeneous width and lengths in units
//! where `c = 1`. The collective coupling is calibrated from the optical
//! depth `d` so that a narrowband resonant probe is transmitted with
//! intensity `e^{-d}`: with `∂_z A = i g Σ wₖ Pₖ` and `∂_u P = −iΔP + i g A`
//! the resonant amplitude decays at rate `π g² G(0)`, hence
//! `g² L = d / (2π G(0))`.
//!
//! Whether the sign flip of the detunings comes from Doppler shifts of
//! counter-propagating beams or from a switched field gradient does not
//! matter here: both are the abstract inversion `Δ → −Δ` of
//! [`AtomicMedium::inverted`].

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Spectral shape of the inhomogeneous line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Unit standard deviation.
    #[default]
    Gaussian,
    /// Unit half width at half maximum.
    Lorentzian,
    /// Explicit node/weight table.
    Custom,
}

impl Profile {
    pub fn density<T: Real>(self, delta: T) -> T {
        match self {
            Profile::Gaussian => (-T::lit(0.5) * delta * delta).exp() / T::TAU().sqrt(),
            Profile::Lorentzian => T::FRAC_1_PI() / (T::one() + delta * delta),
            Profile::Custom => T::nan(),
        }
    }

    fn min_span(self) -> f64 {
        match self {
            Profile::Gaussian => 4.0,
            Profile::Lorentzian => 20.0,
            Profile::Custom => 0.0,
        }
    }
}

/// Medium description as it appears in scenario configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSpec {
    #[serde(default)]
    pub profile: Profile,
    pub d: f64,
    pub nz: usize,
    pub n_detunings: usize,
    pub span: f64,
    #[serde(default)]
    pub omega21_mismatch: f64,
    #[serde(default = "MediumSpec::default_length")]
    pub length: f64,
}

impl MediumSpec {
    fn default_length() -> f64 {
        1.0
    }

    pub fn build<T: Real>(&self) -> Result<AtomicMedium<T>> {
        Ok(build_medium(self.profile, T::lit(self.d), self.nz, self.n_detunings, T::lit(self.span))?
            .with_length(T::lit(self.length))?
            .with_mismatch(T::lit(self.omega21_mismatch)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMedium<T> {
    length: T,
    nz: usize,
    detunings: Vec<T>,
    weights: Vec<T>,
    profile: Profile,
    optical_depth: T,
    density_at_zero: T,
    omega21: T,
    omega32: T,
    /// Residual phase-matching error ε of the backward mode, applied as `e^{iεz}`.
    mismatch: T,
    inverted: bool,
}

/// Uniform detuning grid over `[-span, span]` weighted by the profile.
pub fn build_medium<T: Real>(profile: Profile, d: T, nz: usize, n_detunings: usize, span: T) -> Result<AtomicMedium<T>> {
    if profile == Profile::Custom {
        return Err(Error::param("profile", "custom profiles are built with AtomicMedium::from_table"));
    }
    if !(d >= T::zero()) || !d.is_finite() {
        return Err(Error::param("d", "optical depth must be finite and non-negative"));
    }
    if nz < 2 {
        return Err(Error::param("nz", "need at least two spatial cells"));
    }
    if n_detunings < 16 {
        return Err(Error::param("n_detunings", "need at least 16 detuning nodes"));
    }
    if span < T::lit(profile.min_span()) {
        return Err(Error::param("span", format!("must be at least {} for {profile:?}", profile.min_span())));
    }
    let step = T::lit(2.0) * span / T::from_usize_lossy(n_detunings - 1);
    let detunings: Vec<T> = (0..n_detunings).map(|k| -span + step * T::from_usize_lossy(k)).collect();
    let raw: Vec<T> = detunings.iter().map(|&x| profile.density(x)).collect();
    let total = raw.iter().fold(T::zero(), |a, &w| a + w);
    let weights = raw.iter().map(|&w| w / total).collect();
    // Density of the discrete line at resonance, as seen by the quadrature.
    let density_at_zero = profile.density(T::zero()) / (total * step);
    Ok(AtomicMedium {
        length: T::one(),
        nz,
        detunings,
        weights,
        profile,
        optical_depth: d,
        density_at_zero,
        omega21: T::zero(),
        omega32: T::zero(),
        mismatch: T::zero(),
        inverted: false,
    })
}

impl<T: Real> AtomicMedium<T> {
    /// Medium from an explicit `(Δ, weight)` table. Weights are normalized;
    /// `density_at_zero` sets the coupling calibration.
    pub fn from_table(table: &[(T, T)], d: T, nz: usize, density_at_zero: T) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::param("table", "empty detuning table"));
        }
        if table.iter().any(|(x, w)| !x.is_finite() || !w.is_finite() || *w <= T::zero()) {
            return Err(Error::param("table", "weights must be positive and finite"));
        }
        if !(density_at_zero > T::zero()) || !density_at_zero.is_finite() {
            return Err(Error::param("density_at_zero", "must be positive and finite"));
        }
        if !(d >= T::zero()) || !d.is_finite() {
            return Err(Error::param("d", "optical depth must be finite and non-negative"));
        }
        if nz < 2 {
            return Err(Error::param("nz", "need at least two spatial cells"));
        }
        let total = table.iter().fold(T::zero(), |a, (_, w)| a + *w);
        Ok(Self {
            length: T::one(),
            nz,
            detunings: table.iter().map(|(x, _)| *x).collect(),
            weights: table.iter().map(|(_, w)| *w / total).collect(),
            profile: Profile::Custom,
            optical_depth: d,
            density_at_zero,
            omega21: T::zero(),
            omega32: T::zero(),
            mismatch: T::zero(),
            inverted: false,
        })
    }

    pub fn with_length(mut self, length: T) -> Result<Self> {
        if !(length > T::zero()) {
            return Err(Error::param("length", "must be positive"));
        }
        self.length = length;
        Ok(self)
    }

    pub fn with_mismatch(mut self, epsilon: T) -> Self {
        self.mismatch = epsilon;
        self
    }

    pub fn with_splittings(mut self, omega21: T, omega32: T) -> Self {
        self.omega21 = omega21;
        self.omega32 = omega32;
        self
    }

    pub fn with_nz(mut self, nz: usize) -> Result<Self> {
        if nz < 2 {
            return Err(Error::param("nz", "need at least two spatial cells"));
        }
        self.nz = nz;
        Ok(self)
    }

    pub fn with_optical_depth(mut self, d: T) -> Result<Self> {
        if !(d >= T::zero()) {
            return Err(Error::param("d", "must be non-negative"));
        }
        self.optical_depth = d;
        Ok(self)
    }

    /// Every detuning negated, weights kept with their nodes.
    pub fn inverted(&self) -> Self {
        let mut out = self.clone();
        out.detunings.iter_mut().for_each(|x| *x = -*x);
        out.inverted = !self.inverted;
        out
    }

    pub fn is_inverted(&self) -> bool {
        self.inverted
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dz(&self) -> T {
        self.length / T::from_usize_lossy(self.nz)
    }

    /// Center of spatial cell `i`.
    pub fn z(&self, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.dz()
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn n_detunings(&self) -> usize {
        self.detunings.len()
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn optical_depth(&self) -> T {
        self.optical_depth
    }

    pub fn density_at_zero(&self) -> T {
        self.density_at_zero
    }

    pub fn omega21(&self) -> T {
        self.omega21
    }

    pub fn omega32(&self) -> T {
        self.omega32
    }

    pub fn mismatch(&self) -> T {
        self.mismatch
    }

    /// `β = d / (2π G(0))`, the dimensionless collective coupling `g² L`.
    pub fn beta(&self) -> T {
        self.optical_depth / (T::TAU() * self.density_at_zero)
    }

    /// Field–coherence coupling `g = √(β / L)`.
    pub fn coupling(&self) -> T {
        (self.beta() / self.length).sqrt()
    }

    pub fn weight_sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &w| a + w)
    }

    pub fn max_abs_detuning(&self) -> T {
        self.detunings.iter().fold(T::zero(), |a, x| a.max(x.abs()))
    }
}

/// Which optical coherence currently holds the stored excitation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// Optical coherence between ground and excited state.
    Sigma13,
    /// Long-lived spin coherence between the two ground levels.
    Sigma12,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::Sigma13 => "sigma13",
            Transition::Sigma12 => "sigma12",
        }
    }
}

/// Single-excitation coherence amplitudes on the `(z, Δ)` grid.
///
/// Amplitudes are scaled so that `Σ wₖ|Pᵢₖ|² dz` is the excitation number.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceField<T> {
    pub(crate) active: Transition,
    pub(crate) amps: Vec<Complex<T>>,
    pub(crate) nz: usize,
    pub(crate) nk: usize,
    pub(crate) dz: T,
    pub(crate) weights: Vec<T>,
    pub(crate) stored_phase: T,
    /// Retarded time at which the amplitudes were frozen.
    pub(crate) epoch: T,
    /// Time step of the stage that produced the field.
    pub(crate) dt: T,
}

impl<T: Real> CoherenceField<T> {
    pub fn zeros(medium: &AtomicMedium<T>, active: Transition, epoch: T, dt: T) -> Self {
        Self {
            active,
            amps: vec![Complex::new(T::zero(), T::zero()); medium.nz() * medium.n_detunings()],
            nz: medium.nz(),
            nk: medium.n_detunings(),
            dz: medium.dz(),
            weights: medium.weights().to_vec(),
            stored_phase: T::zero(),
            epoch,
            dt,
        }
    }

    pub fn active(&self) -> Transition {
        self.active
    }

    pub fn amps(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn amp(&self, iz: usize, k: usize) -> Complex<T> {
        self.amps[iz * self.nk + k]
    }

    pub fn set_amp(&mut self, iz: usize, k: usize, value: Complex<T>) {
        self.amps[iz * self.nk + k] = value;
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nz, self.nk)
    }

    pub fn stored_phase(&self) -> T {
        self.stored_phase
    }

    pub fn epoch(&self) -> T {
        self.epoch
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// `Σᵢₖ wₖ|Pᵢₖ|² dz`.
    pub fn excitation_norm(&self) -> T {
        let mut acc = T::zero();
        for row in self.amps.chunks(self.nk) {
            for (a, &w) in row.iter().zip(&self.weights) {
                acc = acc + w * a.norm_sqr();
            }
        }
        acc * self.dz
    }

    pub fn scaled(&self, c: Complex<T>) -> Self {
        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a = *a * c);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_weights_normalized() {
        let m: AtomicMedium<f64> = build_medium(Profile::Gaussian, 10.0, 20, 201, 6.0).unwrap();
        assert!((m.weight_sum() - 1.0).abs() < 1e-10);
        assert!(m.weights().iter().all(|&w| w > 0.0));
        // Node 100 sits on resonance.
        assert!(m.detunings()[100].abs() < 1e-14);
        // The quadrature density at resonance approaches 1/√(2π).
        assert!((m.density_at_zero() - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn inversion_is_literal_and_involutive() {
        let m: AtomicMedium<f64> =
            AtomicMedium::from_table(&[(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)], 1.0, 4, 0.4).unwrap();
        let inv = m.inverted();
        assert_eq!(inv.detunings(), &[1.0, -0.0, -1.0]);
        assert_eq!(inv.weights(), m.weights());
        assert!(inv.is_inverted());
        assert_eq!(inv.inverted(), m);
    }

    #[test]
    fn symmetric_grid_inverts_to_same_set() {
        let m: AtomicMedium<f64> = build_medium(Profile::Gaussian, 3.0, 4, 33, 5.0).unwrap();
        let inv = m.inverted();
        let mut a = m.detunings().to_vec();
        let mut b = inv.detunings().to_vec();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((inv.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_depth_has_zero_coupling() {
        let m: AtomicMedium<f64> = build_medium(Profile::Gaussian, 0.0, 4, 33, 5.0).unwrap();
        assert_eq!(m.coupling(), 0.0);
    }

    #[test]
    fn rejects_bad_builds() {
        assert!(build_medium::<f64>(Profile::Gaussian, -1.0, 4, 33, 5.0).is_err());
        assert!(build_medium::<f64>(Profile::Gaussian, 1.0, 1, 33, 5.0).is_err());
        assert!(build_medium::<f64>(Profile::Gaussian, 1.0, 4, 8, 5.0).is_err());
        assert!(build_medium::<f64>(Profile::Gaussian, 1.0, 4, 33, 3.0).is_err());
        assert!(build_medium::<f64>(Profile::Lorentzian, 1.0, 4, 33, 10.0).is_err());
        assert!(AtomicMedium::<f64>::from_table(&[(0.0, -1.0)], 1.0, 4, 0.4).is_err());
        assert!(AtomicMedium::<f64>::from_table(&[(0.0, f64::NAN)], 1.0, 4, 0.4).is_err());
        assert!(AtomicMedium::<f64>::from_table(&[], 1.0, 4, 0.4).is_err());
    }

    #[test]
    fn lorentzian_calibration_uses_truncated_density() {
        let m: AtomicMedium<f64> = build_medium(Profile::Lorentzian, 5.0, 4, 801, 20.0).unwrap();
        // About 3% of a unit-HWHM Lorentzian lies beyond ±20.
        let ratio = m.density_at_zero() * std::f64::consts::PI;
        assert!(ratio > 1.02 && ratio < 1.04, "{ratio}");
    }
}
