//! Taut-string reconstruction with local squeezing of the tube.
//!
//! The integrated data `S_i = (1/n) Σ_{j≤i} y_j` are surrounded by a tube of
//! per-point radius `ε_i`, pinned at both ends. The shortest path through the
//! tube is piecewise linear and its derivative, a step function, has the
//! fewest local extremes among all functions whose integral stays inside the
//! tube. The tube is narrowed locally wherever the residuals fail the
//! multiscale criterion, until they pass.

use alloc::vec;
use alloc::vec::Vec;

use crate::multiscale::{
    self, adequacy_check, Diffractogram, Interval, IntervalScheme, NoiseProfile,
};
use crate::variance_segmentation::{self, PiecewiseConstantScale};
use crate::{Error, Result, SIGMA_FLOOR};

/// Smallest admissible tube radius during squeezing.
pub const MIN_HALF_WIDTH: f64 = 1e-12;

/// `S_i = (1/n) Σ_{j≤i} y_j` for `i = 1..=n` (the implicit `S_0 = 0` is omitted).
pub fn partial_sums(counts: &[f64]) -> Vec<f64> {
    let n = counts.len() as f64;
    let mut acc = 0.0;
    counts
        .iter()
        .map(|y| {
            acc += y;
            acc / n
        })
        .collect()
}

/// Tube around the integrated data, stored on the `n + 1` points `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    centers: Vec<f64>,
    half_widths: Vec<f64>,
}

impl Tube {
    /// `centers` and `half_widths` are indexed by tube point `0..=n`;
    /// `centers[0]` must be 0. Radii at the two end points are ignored.
    pub fn new(centers: Vec<f64>, half_widths: Vec<f64>) -> Result<Self> {
        if centers.len() < 2 || centers.len() != half_widths.len() {
            return Err(Error::InvalidInput("tube needs matching centers and radii"));
        }
        if centers[0] != 0.0 {
            return Err(Error::InvalidInput("tube must start at the origin"));
        }
        if half_widths.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::InvalidInput("crossed tube: negative radius"));
        }
        Ok(Self {
            centers,
            half_widths,
        })
    }

    pub fn from_counts(counts: &[f64], half_widths: Vec<f64>) -> Result<Self> {
        let mut centers = Vec::with_capacity(counts.len() + 1);
        centers.push(0.0);
        centers.extend(partial_sums(counts));
        Self::new(centers, half_widths)
    }

    /// Number of data points `n`.
    pub fn n(&self) -> usize {
        self.centers.len() - 1
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    fn pinned(&self, i: usize) -> bool {
        i == 0 || i == self.n()
    }

    pub fn upper(&self, i: usize) -> f64 {
        if self.pinned(i) {
            self.centers[i]
        } else {
            self.centers[i] + self.half_widths[i]
        }
    }

    pub fn lower(&self, i: usize) -> f64 {
        if self.pinned(i) {
            self.centers[i]
        } else {
            self.centers[i] - self.half_widths[i]
        }
    }
}

/// Which tube wall a knot of the string touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Wall {
    Lower,
    Upper,
    /// One of the two pinned end points.
    Pinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExtremeKind {
    Maximum,
    Minimum,
}

/// An interior local extreme of a step function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Extreme {
    pub kind: ExtremeKind,
    /// Data indices covered by the extreme (a plateau of equal pieces is one extreme).
    pub span: Interval,
    pub value: f64,
}

/// Derivative of the taut string.
///
/// Piece `p` covers data indices `knots[p]..knots[p + 1]` (closed-left),
/// i.e. tube segment `[knots[p], knots[p + 1]]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepFunction {
    pub knots: Vec<usize>,
    pub walls: Vec<Wall>,
    /// Piece values after the cross-over mean correction.
    pub values: Vec<f64>,
    /// Slopes of the string itself, before correction.
    pub slopes: Vec<f64>,
}

impl StepFunction {
    pub fn n(&self) -> usize {
        *self.knots.last().unwrap_or(&0)
    }

    pub fn pieces(&self) -> usize {
        self.values.len()
    }

    pub fn piece_span(&self, p: usize) -> Interval {
        Interval::new(self.knots[p], self.knots[p + 1] - 1)
    }

    /// Value at every data point.
    pub fn evaluate(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n());
        for (p, &v) in self.values.iter().enumerate() {
            out.extend(core::iter::repeat_n(v, self.knots[p + 1] - self.knots[p]));
        }
        out
    }

    /// Local extremes, counting an end plateau that is higher (lower) than
    /// its only neighbour as a maximum (minimum). A constant function has none.
    pub fn local_extremes(&self) -> Vec<Extreme> {
        extremes_of(&self.knots, &self.values, true)
    }

    pub fn local_maxima(&self) -> usize {
        self.local_extremes()
            .iter()
            .filter(|e| e.kind == ExtremeKind::Maximum)
            .count()
    }

    /// Interior local maxima: candidate peaks whose apex lies inside the grid.
    pub fn peaks(&self) -> Vec<Extreme> {
        extremes_of(&self.knots, &self.values, false)
            .into_iter()
            .filter(|e| e.kind == ExtremeKind::Maximum)
            .collect()
    }

    /// Extremes of the uncorrected string slopes.
    pub fn slope_extremes(&self) -> Vec<Extreme> {
        extremes_of(&self.knots, &self.slopes, true)
    }
}

fn extremes_of(knots: &[usize], values: &[f64], with_ends: bool) -> Vec<Extreme> {
    // Collapse runs of equal values into plateaus first.
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (p, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(last) if last.2 == v => last.1 = p,
            _ => runs.push((p, p, v)),
        }
    }
    let mut out = Vec::new();
    if runs.len() < 2 {
        return out;
    }
    let last = runs.len() - 1;
    for r in 0..=last {
        if !with_ends && (r == 0 || r == last) {
            continue;
        }
        let cur = runs[r].2;
        let prev = if r > 0 { Some(runs[r - 1].2) } else { None };
        let next = if r < last { Some(runs[r + 1].2) } else { None };
        let kind = if prev.is_none_or(|p| cur > p) && next.is_none_or(|q| cur > q) {
            ExtremeKind::Maximum
        } else if prev.is_none_or(|p| cur < p) && next.is_none_or(|q| cur < q) {
            ExtremeKind::Minimum
        } else {
            continue;
        };
        out.push(Extreme {
            kind,
            span: Interval::new(knots[runs[r].0], knots[runs[r].1 + 1] - 1),
            value: cur,
        });
    }
    out
}

/// Shortest path through the tube from `(0, 0)` to `(n, S_n)`.
///
/// From the current anchor the admissible slope range is narrowed point by
/// point; when a wall at point `j` leaves the range empty, the string bends at
/// the wall point that defined the violated side and the scan restarts there.
/// Pieces whose end knots lie on different walls (or on a pinned end) are
/// replaced by the mean of the data between the knots.
pub fn taut_string_solve(tube: &Tube) -> Result<StepFunction> {
    let n = tube.n();
    for i in 1..n {
        if tube.lower(i) > tube.upper(i) {
            return Err(Error::InvalidInput("crossed tube"));
        }
    }
    let mut knots = vec![0usize];
    let mut walls = vec![Wall::Pinned];
    let mut heights = vec![0.0];

    let mut anchor = 0usize;
    let mut y_anchor = 0.0;
    while anchor < n {
        let mut s_max = f64::INFINITY;
        let mut k_max = anchor;
        let mut s_min = f64::NEG_INFINITY;
        let mut k_min = anchor;
        let mut j = anchor + 1;
        let (knot, wall, height) = loop {
            let dx = (j - anchor) as f64;
            let s_up = (tube.upper(j) - y_anchor) / dx;
            let s_lo = (tube.lower(j) - y_anchor) / dx;
            if s_lo > s_max {
                break (k_max, Wall::Upper, tube.upper(k_max));
            }
            if s_up < s_min {
                break (k_min, Wall::Lower, tube.lower(k_min));
            }
            if s_up <= s_max {
                s_max = s_up;
                k_max = j;
            }
            if s_lo >= s_min {
                s_min = s_lo;
                k_min = j;
            }
            if j == n {
                break (n, Wall::Pinned, tube.centers[n]);
            }
            j += 1;
        };
        knots.push(knot);
        walls.push(wall);
        heights.push(height);
        anchor = knot;
        y_anchor = height;
    }

    let scale = n as f64;
    let pieces = knots.len() - 1;
    let mut slopes = Vec::with_capacity(pieces);
    let mut values = Vec::with_capacity(pieces);
    for p in 0..pieces {
        let (a, b) = (knots[p], knots[p + 1]);
        let dx = (b - a) as f64;
        let slope = (heights[p + 1] - heights[p]) * scale / dx;
        slopes.push(slope);
        let same_wall = walls[p] == walls[p + 1] && walls[p] != Wall::Pinned;
        values.push(if same_wall {
            slope
        } else {
            (tube.centers[b] - tube.centers[a]) * scale / dx
        });
    }
    Ok(StepFunction {
        knots,
        walls,
        values,
        slopes,
    })
}

/// Taut string of `counts` for a fixed radius schedule (`n + 1` entries).
pub fn taut_string_fit(counts: &[f64], half_widths: &[f64]) -> Result<StepFunction> {
    taut_string_solve(&Tube::from_counts(counts, half_widths.to_vec())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeFit {
    pub fit: StepFunction,
    pub iterations: usize,
    /// Final tube radii, indexed by tube point `0..=n`.
    pub half_widths: Vec<f64>,
}

/// Squeezes the tube until the reconstruction passes the multiscale
/// criterion. Each violating interval `[a, b]` of data indices shrinks the
/// radius by `q` at tube points `a..=b + 1`.
pub fn local_squeeze_fit(
    counts: &[f64],
    scale: &NoiseProfile,
    scheme: &IntervalScheme,
    threshold: f64,
    q: f64,
) -> Result<SqueezeFit> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput("shrink factor must lie in (0, 1)"));
    }
    let n = counts.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty data"));
    }
    let mut tube = Tube::from_counts(counts, vec![0.0; n + 1])?;
    let (lo, hi) = tube
        .centers
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    tube.half_widths.fill(2.0 * (hi - lo) + 1.0);

    let mut residuals = vec![0.0; n];
    let mut cover = vec![0i64; n + 3];
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let fit = taut_string_solve(&tube)?;
        for (r, (y, f)) in residuals.iter_mut().zip(counts.iter().zip(fit.evaluate())) {
            *r = y - f;
        }
        let check = adequacy_check(&residuals, scheme, scale, threshold)?;
        if check.adequate {
            return Ok(SqueezeFit {
                fit,
                iterations,
                half_widths: tube.half_widths,
            });
        }
        cover.fill(0);
        for iv in &check.violating {
            cover[iv.start] += 1;
            cover[iv.end + 2] -= 1;
        }
        let mut depth = 0;
        let mut smallest = f64::INFINITY;
        for (j, eps) in tube.half_widths.iter_mut().enumerate() {
            depth += cover[j];
            if depth > 0 {
                *eps *= q;
                if j > 0 && j < n {
                    smallest = smallest.min(*eps);
                }
            }
        }
        if smallest < MIN_HALF_WIDTH {
            return Err(Error::Numerical(
                "tube radius underflow: noise scale contradicts the data",
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenoiseConfig {
    pub tau: f64,
    pub q: f64,
    pub hetero: bool,
    /// `τ` of the chi-square band used for the ground-noise segmentation.
    pub segmentation_tau: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            q: 0.9,
            hetero: false,
            segmentation_tau: variance_segmentation::DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    /// Second-pass reconstruction.
    pub fit: StepFunction,
    /// Local noise scale used in the second pass.
    pub scale: NoiseProfile,
    /// Global noise estimate after clamping.
    pub sigma: f64,
    pub first_pass: StepFunction,
    pub segmentation: Option<PiecewiseConstantScale>,
    pub iterations: [usize; 2],
    pub threshold: f64,
}

/// Two taut-string passes: the first with a constant noise level, the second
/// with `Σ_i = max(floor_i, √f_i)` built from the first reconstruction, where
/// the floor is the global level or, for heteroscedastic ground noise, a
/// piecewise-constant segmentation of the first-pass residuals.
pub fn denoise_two_pass(d: &Diffractogram, config: &DenoiseConfig) -> Result<Denoised> {
    let y = d.counts();
    let n = y.len();
    let sigma = multiscale::global_scale_estimate(d)?.max(SIGMA_FLOOR);
    let scheme = IntervalScheme::dyadic(n);
    let threshold = multiscale::threshold(n, config.tau);

    let first = local_squeeze_fit(y, &NoiseProfile::constant(n, sigma)?, &scheme, threshold, config.q)?;
    let f1 = first.fit.evaluate();

    let (floor, segmentation) = if config.hetero {
        let residuals: Vec<f64> = y.iter().zip(&f1).map(|(a, b)| a - b).collect();
        let band = variance_segmentation::ChiSquareBand::for_sample(n, config.segmentation_tau)?;
        let seg = variance_segmentation::greedy_segmentation_with_band(&residuals, &band)?;
        (seg.expand(), Some(seg))
    } else {
        (vec![sigma; n], None)
    };
    let scale = multiscale::local_scale(&f1, &floor)?;
    let second = local_squeeze_fit(y, &scale, &scheme, threshold, config.q)?;
    Ok(Denoised {
        fit: second.fit,
        scale,
        sigma,
        first_pass: first.fit,
        segmentation,
        iterations: [first.iterations, second.iterations],
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_sum_examples() {
        assert_eq!(partial_sums(&[1.0; 4]), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(partial_sums(&[2.0, 0.0]), vec![1.0, 1.0]);
        let y = [3.0, 9.0, 4.0];
        assert!((partial_sums(&y)[2] - 16.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_data_gives_single_piece() {
        let y = [4.0; 10];
        let fit = taut_string_fit(&y, &[0.01; 11]).unwrap();
        assert_eq!(fit.knots, vec![0, 10]);
        assert!((fit.values[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn huge_tube_gives_mean() {
        let y = [1.0, 7.0, 2.0, 9.0, 3.0];
        let fit = taut_string_fit(&y, &[100.0; 6]).unwrap();
        assert_eq!(fit.pieces(), 1);
        assert!((fit.values[0] - 4.4).abs() < 1e-12);
        assert!(fit.local_extremes().is_empty());
    }

    #[test]
    fn zero_tube_interpolates() {
        let y = [1.0, 7.0, 2.0, 9.0, 3.0];
        let fit = taut_string_fit(&y, &[0.0; 6]).unwrap();
        let f = fit.evaluate();
        for (a, b) in f.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(fit.peaks().len(), 2);
    }

    #[test]
    fn crossed_tube_is_rejected() {
        assert!(Tube::from_counts(&[1.0, 2.0], vec![0.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn squeeze_rejects_bad_factor() {
        let y = [1.0; 8];
        let s = IntervalScheme::dyadic(8);
        assert!(local_squeeze_fit(&y, &NoiseProfile::unit(8), &s, 2.0, 1.0).is_err());
    }
}
