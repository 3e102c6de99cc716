//! Weighted smoothing splines with adaptively grown weights.
//!
//! For weights `λ_i > 0` the minimizer of
//! `Σ λ_i (y_i − g(t_i))² + ∫ g''(t)² dt` is a natural cubic spline with knots
//! at the design points. It is computed from the Reinsch normal equations
//! `(R + Qᵀ Λ⁻¹ Q) γ = Qᵀ y`, `g = y − Λ⁻¹ Q γ`, where `γ` holds the interior
//! second derivatives; the system is symmetric pentadiagonal.

use alloc::vec;
use alloc::vec::Vec;

use crate::multiscale::{adequacy_check, Diffractogram, IntervalScheme, NoiseProfile};
use crate::{Error, Result};

/// Natural cubic spline stored as knot values and second derivatives.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() || knots.len() != second.len() {
            return Err(Error::InvalidInput("spline arrays must match and hold two knots"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("knots must be strictly increasing"));
        }
        if second[0] != 0.0 || second[second.len() - 1] != 0.0 {
            return Err(Error::InvalidInput("natural spline needs zero end curvature"));
        }
        Ok(Self {
            knots,
            values,
            second,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.second
    }

    /// Value (`order` 0), first or second derivative at `t`. Beyond the end
    /// knots the spline continues linearly.
    pub fn eval(&self, t: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidInput("derivative order must be 0, 1 or 2"));
        }
        Ok(self.eval_unchecked(t, order))
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval_unchecked(t, 0)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.eval_unchecked(t, 1)
    }

    fn eval_unchecked(&self, t: f64, order: u8) -> f64 {
        let n = self.knots.len();
        let (first, last) = (self.knots[0], self.knots[n - 1]);
        if t < first || t > last {
            let (k, edge) = if t < first { (0, first) } else { (n - 1, last) };
            let slope = self.piece_eval(if k == 0 { 0 } else { n - 2 }, edge, 1);
            return match order {
                0 => self.values[k] + slope * (t - edge),
                1 => slope,
                _ => 0.0,
            };
        }
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        self.piece_eval(i, t, order)
    }

    fn piece_eval(&self, i: usize, t: f64, order: u8) -> f64 {
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = 1.0 - a;
        let (g0, g1) = (self.values[i], self.values[i + 1]);
        let (c0, c1) = (self.second[i], self.second[i + 1]);
        match order {
            0 => a * g0 + b * g1 + ((a * a * a - a) * c0 + (b * b * b - b) * c1) * h * h / 6.0,
            1 => (g1 - g0) / h - (3.0 * a * a - 1.0) / 6.0 * h * c0 + (3.0 * b * b - 1.0) / 6.0 * h * c1,
            _ => a * c0 + b * c1,
        }
    }

    /// `∫ g''(t)² dt` over the knot range.
    pub fn roughness(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.second.windows(2))
            .map(|(k, c)| (k[1] - k[0]) / 3.0 * (c[0] * c[0] + c[0] * c[1] + c[1] * c[1]))
            .sum()
    }
}

/// Positive per-point weights `λ_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput("weights must be positive and finite"));
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize, w: f64) -> Result<Self> {
        Self::new(vec![w; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Symmetric pentadiagonal matrix: main diagonal and the first two upper bands.
#[derive(Debug, Clone)]
struct Pentadiagonal {
    d0: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl Pentadiagonal {
    fn mul(&self, x: &[f64]) -> Vec<f64> {
        let m = self.d0.len();
        (0..m)
            .map(|i| {
                let mut s = self.d0[i] * x[i];
                if i + 1 < m {
                    s += self.d1[i] * x[i + 1];
                }
                if i + 2 < m {
                    s += self.d2[i] * x[i + 2];
                }
                if i >= 1 {
                    s += self.d1[i - 1] * x[i - 1];
                }
                if i >= 2 {
                    s += self.d2[i - 2] * x[i - 2];
                }
                s
            })
            .collect()
    }

    /// Banded LDLᵀ factorization and solve.
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.d0.len();
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for i in 0..m {
            let mut di = self.d0[i];
            if i >= 1 {
                di -= l1[i - 1] * l1[i - 1] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i - 2] * l2[i - 2] * d[i - 2];
            }
            if !(di > 0.0) {
                return Err(Error::Numerical("smoothing system is not positive definite"));
            }
            d[i] = di;
            if i + 1 < m {
                let mut v = self.d1[i];
                if i >= 1 {
                    v -= l2[i - 1] * l1[i - 1] * d[i - 1];
                }
                l1[i] = v / di;
            }
            if i + 2 < m {
                l2[i] = self.d2[i] / di;
            }
        }
        let mut z = rhs.to_vec();
        for i in 0..m {
            if i >= 1 {
                z[i] -= l1[i - 1] * z[i - 1];
            }
            if i >= 2 {
                z[i] -= l2[i - 2] * z[i - 2];
            }
        }
        for i in 0..m {
            z[i] /= d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                z[i] -= l1[i] * z[i + 1];
            }
            if i + 2 < m {
                z[i] -= l2[i] * z[i + 2];
            }
        }
        Ok(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSolution {
    pub spline: NaturalCubicSpline,
    /// `‖Aγ − Qᵀy‖∞ / ‖Qᵀy‖∞` of the solved normal equations (0 when `Qᵀy = 0`).
    pub normal_residual: f64,
}

/// Minimizer of the weighted penalized least-squares criterion on `(x, y)`.
pub fn smoothing_spline(x: &[f64], y: &[f64], weights: &WeightVector) -> Result<SmoothingSolution> {
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput("smoothing spline needs at least three points"));
    }
    if y.len() != n || weights.len() != n {
        return Err(Error::InvalidInput("x, y and weights differ in length"));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("design points must be strictly increasing"));
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let inv_w: Vec<f64> = weights.as_slice().iter().map(|w| 1.0 / w).collect();
    let m = n - 2;

    // Column j of Q (interior knot j + 1) has entries a, b, c at rows j, j + 1, j + 2.
    let qa: Vec<f64> = (0..m).map(|j| 1.0 / h[j]).collect();
    let qc: Vec<f64> = (0..m).map(|j| 1.0 / h[j + 1]).collect();
    let qb: Vec<f64> = (0..m).map(|j| -qa[j] - qc[j]).collect();

    let mut system = Pentadiagonal {
        d0: vec![0.0; m],
        d1: vec![0.0; m.saturating_sub(1)],
        d2: vec![0.0; m.saturating_sub(2)],
    };
    for j in 0..m {
        system.d0[j] = (h[j] + h[j + 1]) / 3.0
            + inv_w[j] * qa[j] * qa[j]
            + inv_w[j + 1] * qb[j] * qb[j]
            + inv_w[j + 2] * qc[j] * qc[j];
        if j + 1 < m {
            system.d1[j] = h[j + 1] / 6.0 + inv_w[j + 1] * qb[j] * qa[j + 1] + inv_w[j + 2] * qc[j] * qb[j + 1];
        }
        if j + 2 < m {
            system.d2[j] = inv_w[j + 2] * qc[j] * qa[j + 2];
        }
    }
    let rhs: Vec<f64> = (0..m)
        .map(|j| qa[j] * y[j] + qb[j] * y[j + 1] + qc[j] * y[j + 2])
        .collect();
    let gamma = system.solve(&rhs)?;

    let rhs_norm = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let normal_residual = if rhs_norm > 0.0 {
        system
            .mul(&gamma)
            .iter()
            .zip(&rhs)
            .fold(0.0_f64, |a, (l, r)| a.max((l - r).abs()))
            / rhs_norm
    } else {
        0.0
    };

    // g = y − Λ⁻¹ Q γ
    let mut q_gamma = vec![0.0; n];
    for j in 0..m {
        q_gamma[j] += qa[j] * gamma[j];
        q_gamma[j + 1] += qb[j] * gamma[j];
        q_gamma[j + 2] += qc[j] * gamma[j];
    }
    let values: Vec<f64> = (0..n).map(|i| y[i] - inv_w[i] * q_gamma[i]).collect();
    let mut second = Vec::with_capacity(n);
    second.push(0.0);
    second.extend(gamma);
    second.push(0.0);

    Ok(SmoothingSolution {
        spline: NaturalCubicSpline::new(x.to_vec(), values, second)?,
        normal_residual,
    })
}

pub fn solve_weighted_spline(d: &Diffractogram, weights: &WeightVector) -> Result<NaturalCubicSpline> {
    smoothing_spline(d.angles(), d.counts(), weights).map(|s| s.spline)
}

/// `Σ λ_i (y_i − g(t_i))² + ∫ g''²` for a spline with knots at the design points.
pub fn penalized_objective(spline: &NaturalCubicSpline, y: &[f64], weights: &WeightVector) -> f64 {
    let fit: f64 = spline
        .values()
        .iter()
        .zip(y)
        .zip(weights.as_slice())
        .map(|((g, y), w)| w * (y - g) * (y - g))
        .sum();
    fit + spline.roughness()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdaptiveSplineConfig {
    /// Multiplicative weight growth on violating intervals.
    pub q_up: f64,
    pub max_iterations: usize,
    /// Starting weight; `None` uses `10⁻⁶ / range(x)⁴`.
    pub initial_weight: Option<f64>,
}

impl Default for AdaptiveSplineConfig {
    fn default() -> Self {
        Self {
            q_up: 2.0,
            max_iterations: 200,
            initial_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSplineFit {
    pub spline: NaturalCubicSpline,
    pub weights: WeightVector,
    pub iterations: usize,
    pub converged: bool,
}

/// Grows the weights until the spline passes the multiscale criterion and
/// returns the last iterate whether or not it converged.
pub fn adaptive_weights_iterate(
    x: &[f64],
    y: &[f64],
    scale: &NoiseProfile,
    scheme: &IntervalScheme,
    threshold: f64,
    config: &AdaptiveSplineConfig,
) -> Result<AdaptiveSplineFit> {
    if !(config.q_up > 1.0) {
        return Err(Error::InvalidInput("weight growth factor must exceed 1"));
    }
    if config.max_iterations == 0 {
        return Err(Error::InvalidInput("iteration cap must be positive"));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput("smoothing spline needs at least three points"));
    }
    let range = x[n - 1] - x[0];
    let initial = config
        .initial_weight
        .unwrap_or_else(|| 1e-6 / (range * range * range * range));
    let mut weights = WeightVector::uniform(n, initial)?;
    let mut residuals = vec![0.0; n];
    let mut cover = vec![0i64; n + 2];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let spline = smoothing_spline(x, y, &weights)?.spline;
        for (r, (yi, gi)) in residuals.iter_mut().zip(y.iter().zip(spline.values())) {
            *r = yi - gi;
        }
        let check = adequacy_check(&residuals, scheme, scale, threshold)?;
        if check.adequate || iterations >= config.max_iterations {
            return Ok(AdaptiveSplineFit {
                spline,
                weights,
                iterations,
                converged: check.adequate,
            });
        }
        cover.fill(0);
        for iv in &check.violating {
            cover[iv.start] += 1;
            cover[(iv.end + 2).min(n)] -= 1;
        }
        let mut depth = 0;
        for (i, w) in weights.0.iter_mut().enumerate() {
            depth += cover[i];
            if depth > 0 {
                *w *= config.q_up;
            }
        }
        if weights.0.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical("spline weights overflowed"));
        }
    }
}

/// [`adaptive_weights_iterate`], failing when the iteration cap is reached.
pub fn fit_adaptive_weights(
    x: &[f64],
    y: &[f64],
    scale: &NoiseProfile,
    scheme: &IntervalScheme,
    threshold: f64,
    config: &AdaptiveSplineConfig,
) -> Result<AdaptiveSplineFit> {
    let fit = adaptive_weights_iterate(x, y, scale, scheme, threshold, config)?;
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged {
            stage: "weighted smoothing spline",
            iterations: fit.iterations,
        })
    }
}
