//! Torus geometry, the current setting and the scaled unit system.
//!
//! Every quantity in the crate is dimensionless: energies in `ħ²/(2m_pR²)`,
//! toroidal dipoles in `ħR/(10m_p)` and currents in `I₀ = πħ/(μ₀qR)`.

use crate::error::{Error, Result};
use crate::integrals::AspectRatio;

/// Major radius used when none is given, in nm.
pub const DEFAULT_MAJOR_RADIUS_NM: f64 = 250.0;
/// Wire length over major radius (L = 2000 nm with R = 250 nm).
pub const DEFAULT_L_OVER_R: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub a: AspectRatio,
    /// Major radius `R` in nm. Only enters SI conversions.
    pub major_radius_nm: f64,
    pub l_over_r: f64,
}

impl Geometry {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_wire(a, DEFAULT_L_OVER_R)
    }

    pub fn with_wire(a: f64, l_over_r: f64) -> Result<Self> {
        let a = AspectRatio::new(a)?;
        if !(l_over_r.is_finite() && l_over_r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "L/R must be positive and finite, got {l_over_r}"
            )));
        }
        let g = Geometry {
            a,
            major_radius_nm: DEFAULT_MAJOR_RADIUS_NM,
            l_over_r,
        };
        let lambda = g.lambda();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log(2aL/R) must be positive, got {lambda} (a = {}, L/R = {l_over_r})",
                a.get()
            )));
        }
        Ok(g)
    }

    pub fn with_major_radius(mut self, nm: f64) -> Result<Self> {
        if !(nm.is_finite() && nm > 0.0) {
            return Err(Error::InvalidParameter(format!("R must be positive, got {nm}")));
        }
        self.major_radius_nm = nm;
        Ok(self)
    }

    /// `λ = ln(2aL/R)`.
    pub fn lambda(&self) -> f64 {
        (2.0 * self.a.get() * self.l_over_r).ln()
    }

    /// Current at which every observable repeats, `2a(a + √(a²−1))` in units of `I₀`.
    ///
    /// The axial wire's vector potential is a pure gauge on the surface except
    /// for the flux it threads through the tube, so the spectrum is periodic
    /// in that flux. Sweeps measure the period; this value is what they
    /// should find.
    pub fn flux_period(&self) -> f64 {
        2.0 * self.a.get() / self.a.decay()
    }
}

/// Dimensionless current `i = I/I₀`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Current(f64);

impl Current {
    pub fn new(i: f64) -> Result<Self> {
        if i.is_finite() {
            Ok(Current(i))
        } else {
            Err(Error::InvalidParameter(format!("current must be finite, got {i}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

pub mod units {
    //! Conversion of the three scaled units to SI.

    pub const HBAR: f64 = 1.054_571_817e-34; // J s
    pub const MU0: f64 = 1.256_637_062_12e-6; // kg m /(s² A²)
    pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19; // C
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31; // kg

    /// SI values of the scaled units for a particle of charge `q` and mass
    /// `m_p` on a torus of major radius `R`.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Scales {
        /// `I₀ = πħ/(μ₀ q R)` in A.
        pub current: f64,
        /// `ħ²/(2 m_p R²)` in J.
        pub energy: f64,
        /// `ħR/(10 m_p)` in A m³ (current density times volume times length).
        pub dipole: f64,
    }

    impl Scales {
        pub fn new(major_radius_m: f64, charge: f64, mass: f64) -> Self {
            Scales {
                current: std::f64::consts::PI * HBAR / (MU0 * charge * major_radius_m),
                energy: HBAR * HBAR / (2.0 * mass * major_radius_m * major_radius_m),
                dipole: HBAR * major_radius_m / (10.0 * mass),
            }
        }

        pub fn electron(major_radius_nm: f64) -> Self {
            Self::new(major_radius_nm * 1e-9, ELECTRON_CHARGE, ELECTRON_MASS)
        }

        /// Physical size of one toroidal-dipole quantum, `ħR/(4m_p) = (5/2)·ħR/(10m_p)`.
        pub fn dipole_quantum(&self) -> f64 {
            2.5 * self.dipole
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_uses_natural_log() {
        let g = Geometry::new(2.0).unwrap();
        assert!((g.lambda() - 32f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new(1.0).is_err());
        assert!(Geometry::with_wire(2.0, 0.0).is_err());
        assert!(Geometry::with_wire(2.0, 0.1).is_err()); // 2aL/R < 1
        assert!(Current::new(f64::INFINITY).is_err());
    }

    #[test]
    fn flux_period_values() {
        let p = Geometry::new(3.0).unwrap().flux_period();
        assert!((p - 6.0 * (3.0 + 8f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn electron_scales() {
        let s = units::Scales::electron(250.0);
        // πħ/(μ0 e R) for R = 250 nm is about 6.6 mA.
        assert!((s.current - 6.58e-3).abs() < 1e-4, "{}", s.current);
        assert!((s.dipole_quantum() / s.dipole - 2.5).abs() < 1e-15);
    }
}
