//! Event timeline of the three-pulse protocol.

use crate::error::{Error, Result};
use crate::real::Real;

/// Times of the two control π-pulses and of the detuning inversion, plus the
/// control-laser phases.
///
/// The retrieval epoch is fixed by mirror symmetry: `t₂ = 2·t_inv − t₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolSchedule<T> {
    pub t1: T,
    pub t_inv: T,
    pub t2: T,
    pub xi1: T,
    pub xi2: T,
    /// Spin-to-excited splitting; only enters through the phase `ω₃₂·(t₂−t₁)`.
    pub omega32: T,
}

impl<T: Real> ProtocolSchedule<T> {
    /// Schedule with `t₂ = 2·t_inv − t₁` and zero control phases.
    pub fn mirrored(t1: T, t_inv: T) -> Self {
        Self {
            t1,
            t_inv,
            t2: T::lit(2.0) * t_inv - t1,
            xi1: T::zero(),
            xi2: T::zero(),
            omega32: T::zero(),
        }
    }

    pub fn with_phases(mut self, xi1: T, xi2: T) -> Self {
        self.xi1 = xi1;
        self.xi2 = xi2;
        self
    }

    pub fn with_omega32(mut self, omega32: T) -> Self {
        self.omega32 = omega32;
        self
    }

    /// Deviation of `t₂` from the mirror time `2·t_inv − t₁`.
    pub fn mirror_error(&self) -> T {
        self.t2 - (T::lit(2.0) * self.t_inv - self.t1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 < self.t_inv && self.t_inv < self.t2) {
            return Err(Error::Schedule(format!(
                "need t1 < t_inv < t2, got {} / {} / {}",
                self.t1, self.t_inv, self.t2
            )));
        }
        let scale = T::one().max(self.t2.abs());
        let tol = T::lit(1e-9).max(T::lit(16.0) * T::epsilon());
        if self.mirror_error().abs() > tol * scale {
            return Err(Error::Schedule(format!(
                "t2 = {} is not the mirror time 2·t_inv − t1 = {}",
                self.t2,
                T::lit(2.0) * self.t_inv - self.t1
            )));
        }
        Ok(())
    }

    /// Phase `χ₁₂ = ξ₁ − ξ₂ − ω₃₂·(t₂ − t₁)` imprinted on the retrieved field.
    pub fn chi12(&self) -> T {
        self.xi1 - self.xi2 - self.omega32 * (self.t2 - self.t1)
    }

    /// Retrieval epoch `t′ = t₂ + t₁ − t₀` for an input referenced to `t₀`.
    pub fn t_prime(&self, t0: T) -> T {
        self.t2 + self.t1 - t0
    }

    /// Time about which the retrieved field is the mirror image of the input.
    pub fn pivot(&self) -> T {
        T::lit(0.5) * (self.t1 + self.t2)
    }

    pub fn storage_time(&self) -> T {
        self.t2 - self.t1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi12_combines_laser_phases_and_delay() {
        let s: ProtocolSchedule<f64> = ProtocolSchedule::mirrored(10.0, 15.0).with_phases(0.7, 0.2).with_omega32(0.1);
        assert!((s.chi12() - (0.5 - 0.1 * 10.0)).abs() < 1e-15);
        assert_eq!(s.t2, 20.0);
        assert_eq!(s.pivot(), 15.0);
        assert_eq!(s.t_prime(-5.0), 35.0);
    }

    #[test]
    fn broken_mirror_is_rejected() {
        let mut s = ProtocolSchedule::mirrored(10.0, 15.0);
        s.validate().unwrap();
        s.t2 = 21.0;
        assert!(matches!(s.validate(), Err(Error::Schedule(_))));
        let out_of_order = ProtocolSchedule { t1: 5.0, t_inv: 4.0, t2: 3.0, ..s };
        assert!(out_of_order.validate().is_err());
    }
}
