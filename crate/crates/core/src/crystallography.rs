//! Lattice spacings from peak positions for cubic crystals.

use crate::{Error, Result};

/// Cu Kα₁ wavelength, nm.
pub const CU_K_ALPHA1: f64 = 0.154056;
/// Lattice constant of In₂O₃, nm.
pub const IN2O3_A0: f64 = 1.0118;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeConfig {
    /// Wavelength, nm.
    pub wavelength: f64,
    /// Ideal lattice constant, nm.
    pub a0: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            wavelength: CU_K_ALPHA1,
            a0: IN2O3_A0,
        }
    }
}

impl LatticeConfig {
    pub fn new(wavelength: f64, a0: f64) -> Result<Self> {
        if !(wavelength > 0.0) || !(a0 > 0.0) || !wavelength.is_finite() || !a0.is_finite() {
            return Err(Error::InvalidInput("wavelength and lattice constant must be positive"));
        }
        Ok(Self { wavelength, a0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MillerIndices {
    pub h: i32,
    pub k: i32,
    pub l: i32,
}

impl MillerIndices {
    pub fn new(h: i32, k: i32, l: i32) -> Result<Self> {
        if h == 0 && k == 0 && l == 0 {
            return Err(Error::InvalidInput("Miller indices must not all be zero"));
        }
        Ok(Self { h, k, l })
    }

    pub fn norm_squared(&self) -> f64 {
        let (h, k, l) = (self.h as f64, self.k as f64, self.l as f64);
        h * h + k * k + l * l
    }
}

/// Plane spacing from the Bragg condition `2 d sin θ = λ`; `two_theta` in degrees.
pub fn bragg_d(two_theta: f64, wavelength: f64) -> Result<f64> {
    if !(two_theta > 0.0 && two_theta < 360.0) {
        return Err(Error::Domain("diffraction angle must lie in (0, 360) degrees"));
    }
    let s = libm::sin(two_theta.to_radians() / 2.0);
    if !(s > 0.0) {
        return Err(Error::Domain("sin(theta) vanishes"));
    }
    Ok(wavelength / (2.0 * s))
}

/// `d_hkl = a₀ / √(h² + k² + l²)` for a cubic lattice.
pub fn d_ideal(idx: MillerIndices, a0: f64) -> Result<f64> {
    let n = idx.norm_squared();
    if n == 0.0 {
        return Err(Error::InvalidInput("Miller indices must not all be zero"));
    }
    Ok(a0 / libm::sqrt(n))
}

/// Relative deviation `(d − d₀)/d₀` of the measured spacing (a plain ratio,
/// not a percentage).
pub fn lattice_distortion(two_theta: f64, idx: MillerIndices, cfg: &LatticeConfig) -> Result<f64> {
    let d = bragg_d(two_theta, cfg.wavelength)?;
    let d0 = d_ideal(idx, cfg.a0)?;
    Ok((d - d0) / d0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeRow {
    pub indices: MillerIndices,
    pub two_theta: f64,
    pub d: f64,
    pub d_ideal: f64,
    pub distortion: f64,
}

pub fn lattice_row(two_theta: f64, idx: MillerIndices, cfg: &LatticeConfig) -> Result<LatticeRow> {
    let d = bragg_d(two_theta, cfg.wavelength)?;
    let d0 = d_ideal(idx, cfg.a0)?;
    Ok(LatticeRow {
        indices: idx,
        two_theta,
        d,
        d_ideal: d0,
        distortion: (d - d0) / d0,
    })
}
