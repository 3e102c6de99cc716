use crate::math;
use crate::{Error, Result};

/// One Pearson VII kernel `γ (1 + (t − μ)²/(a² m))^(−m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PearsonComponent {
    /// Height at the maximum, counts.
    pub gamma: f64,
    /// Location, degrees 2θ.
    pub mu: f64,
    /// Shape; 1 is Cauchy, large values approach a Gaussian.
    pub m: f64,
    /// Width, degrees 2θ.
    pub a: f64,
}

impl PearsonComponent {
    pub fn new(gamma: f64, mu: f64, m: f64, a: f64) -> Result<Self> {
        if !(gamma > 0.0) || !(a > 0.0) || !(m >= 1.0) || !mu.is_finite() {
            return Err(Error::InvalidInput("Pearson VII needs gamma > 0, a > 0, m >= 1"));
        }
        if !gamma.is_finite() || !a.is_finite() || !m.is_finite() {
            return Err(Error::InvalidInput("non-finite Pearson VII parameter"));
        }
        Ok(Self { gamma, mu, m, a })
    }

    /// Width parameter that gives the requested full width at half maximum.
    pub fn a_from_fwhm(fwhm: f64, m: f64) -> f64 {
        fwhm / (2.0 * libm::sqrt(m * libm::expm1(core::f64::consts::LN_2 / m)))
    }
}

/// Unit-height kernel `(1 + (t − μ)²/(a² m))^(−m)`.
pub fn pearson_kernel(t: f64, mu: f64, m: f64, a: f64) -> f64 {
    let z = (t - mu) / a;
    libm::exp(-m * libm::log1p(z * z / m))
}

pub fn pearson_eval(t: f64, c: &PearsonComponent) -> f64 {
    c.gamma * pearson_kernel(t, c.mu, c.m, c.a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakStats {
    pub height: f64,
    /// Integrated intensity, counts·degrees.
    pub intensity: f64,
    /// Full width at half maximum, degrees.
    pub fwhm: f64,
    /// Height below one count; such components are kept but unreliable.
    pub negligible: bool,
}

/// Height below which an accepted component is flagged as negligible.
pub const NEGLIGIBLE_HEIGHT: f64 = 1.0;

/// `I = Γ(m − ½) √(π m) a γ / Γ(m)` and `FWHM = 2a √(m (2^(1/m) − 1))`.
pub fn peak_stats(c: &PearsonComponent) -> Result<PeakStats> {
    if !(c.m >= 1.0) {
        return Err(Error::InvalidInput("shape m must be at least 1"));
    }
    let ratio = libm::exp(math::ln_gamma(c.m - 0.5) - math::ln_gamma(c.m));
    let intensity = ratio * libm::sqrt(core::f64::consts::PI * c.m) * c.a * c.gamma;
    let fwhm = 2.0 * c.a * libm::sqrt(c.m * libm::expm1(core::f64::consts::LN_2 / c.m));
    Ok(PeakStats {
        height: c.gamma,
        intensity,
        fwhm,
        negligible: c.gamma < NEGLIGIBLE_HEIGHT,
    })
}
