use alloc::vec;
use alloc::vec::Vec;

use super::transform::{ParamTransform, Params};
use crate::{Error, Result};

/// One peak interval, prepared for decomposition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentData {
    pub angles: Vec<f64>,
    /// Counts minus baseline.
    pub excess: Vec<f64>,
    pub baseline: Vec<f64>,
    /// Noise scale weighting the least-squares objective.
    pub scale: Vec<f64>,
    /// Lower clamp of the scale used for acceptance.
    pub floor: Vec<f64>,
}

/// Fewest points a segment may have.
pub const MIN_SEGMENT_LEN: usize = 5;

impl SegmentData {
    pub fn new(angles: Vec<f64>, excess: Vec<f64>, baseline: Vec<f64>, scale: Vec<f64>, floor: Vec<f64>) -> Result<Self> {
        let n = angles.len();
        if n < MIN_SEGMENT_LEN {
            return Err(Error::InvalidInput("a segment needs at least five points"));
        }
        if excess.len() != n || baseline.len() != n || scale.len() != n || floor.len() != n {
            return Err(Error::InvalidInput("segment arrays differ in length"));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("segment angles must be strictly increasing"));
        }
        if excess.iter().chain(&baseline).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite segment data"));
        }
        if scale.iter().chain(&floor).any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("segment scales must be positive"));
        }
        Ok(Self {
            angles,
            excess,
            baseline,
            scale,
            floor,
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.angles[0]
    }

    pub fn hi(&self) -> f64 {
        self.angles[self.len() - 1]
    }

    /// Reference angle of the tilt term.
    pub fn center(&self) -> f64 {
        0.5 * (self.lo() + self.hi())
    }
}

/// `β₀ + β₁ (t − center) + Σ γ_i p(t; μ_i, m_i, a_i)`.
pub fn params_eval(t: f64, p: &Params, center: f64) -> f64 {
    p.beta0
        + p.beta1 * (t - center)
        + p.components.iter().map(|c| super::pearson_eval(t, c)).sum::<f64>()
}

/// `R = Σ_j ((f(t_j) − ỹ_j)/Σ_j)²` at constrained parameters.
pub fn wls_value(p: &Params, data: &SegmentData) -> f64 {
    let center = data.center();
    data.angles
        .iter()
        .zip(&data.excess)
        .zip(&data.scale)
        .map(|((&t, &y), &s)| {
            let r = (params_eval(t, p, center) - y) / s;
            r * r
        })
        .sum()
}

/// `R` at raw coordinates, with its gradient with respect to them.
pub fn wls_objective(tr: &ParamTransform, data: &SegmentData, raw: &[f64], grad: &mut [f64]) -> f64 {
    let k = tr.k;
    let p = tr.forward(raw);
    let center = data.center();
    // Gradient in constrained coordinates: β₀, β₁, then μ, γ, a, m blocks.
    let mut gb = [0.0; 2];
    let mut gmu = vec![0.0; k];
    let mut ggamma = vec![0.0; k];
    let mut ga = vec![0.0; k];
    let mut gm = vec![0.0; k];
    let mut cache = vec![(0.0, 0.0, 0.0); k];
    let mut total = 0.0;
    for j in 0..data.len() {
        let t = data.angles[j];
        let mut f = p.beta0 + p.beta1 * (t - center);
        for (c, slot) in p.components.iter().zip(cache.iter_mut()) {
            let z = (t - c.mu) / c.a;
            let u = z * z / c.m;
            let l = libm::log1p(u);
            let kernel = libm::exp(-c.m * l);
            f += c.gamma * kernel;
            *slot = (kernel, u, l);
        }
        let inv_var = 1.0 / (data.scale[j] * data.scale[j]);
        let r = f - data.excess[j];
        total += r * r * inv_var;
        let w = 2.0 * r * inv_var;
        gb[0] += w;
        gb[1] += w * (t - center);
        for (i, (c, &(kernel, u, l))) in p.components.iter().zip(&cache).enumerate() {
            let q = kernel / (1.0 + u);
            ggamma[i] += w * kernel;
            gmu[i] += w * c.gamma * 2.0 * (t - c.mu) / (c.a * c.a) * q;
            ga[i] += w * c.gamma * 2.0 * c.m * u / c.a * q;
            gm[i] += w * c.gamma * kernel * (u / (1.0 + u) - l);
        }
    }

    let th0 = libm::tanh(raw[0]);
    let th1 = libm::tanh(raw[1]);
    grad[0] = gb[0] * tr.d0 * (1.0 - th0 * th0);
    grad[1] = gb[1] * tr.d1 * (1.0 - th1 * th1);

    let s = tr.spacings(&raw[2..2 + k]);
    let width = tr.hi - tr.lo;
    // G_p = Σ_{i ≥ p} ∂R/∂μ_i, with G_k = 0.
    let mut tail = vec![0.0; k + 1];
    for p_ in (0..k).rev() {
        tail[p_] = tail[p_ + 1] + gmu[p_];
    }
    let mean: f64 = tail.iter().zip(&s).map(|(g, s)| g * s).sum();
    let mut acc = 0.0;
    for q in (0..k).rev() {
        acc += width * s[q + 1] * (tail[q + 1] - mean);
        grad[2 + q] = acc;
    }
    for (i, c) in p.components.iter().enumerate() {
        let b = 2 + k + 3 * i;
        grad[b] = ggamma[i] * c.gamma;
        grad[b + 1] = ga[i] * c.a;
        grad[b + 2] = gm[i] * (c.m - 1.0);
    }
    total
}
