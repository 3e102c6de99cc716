//! Peak intervals and the baseline under them.
//!
//! Each local maximum of the taut string marks a peak. Around it, the first
//! derivative of a smoothing spline is scanned outward: the inner boundary is
//! where the flank becomes steeper than the median absolute derivative, the
//! outer boundary where it flattens again (or turns). Removing all peak
//! intervals and smoothing the rest gives the baseline.

use alloc::vec::Vec;

use crate::math;
use crate::multiscale::{self, Diffractogram, IntervalScheme, NoiseProfile};
use crate::taut_string::StepFunction;
use crate::weighted_spline::{fit_adaptive_weights, AdaptiveSplineConfig, AdaptiveSplineFit, NaturalCubicSpline};
use crate::{Error, Result};

/// Largest total width of a peak interval, in degrees 2θ.
pub const MAX_WIDTH: f64 = 5.0;

/// Fewest grid points in a peak interval.
pub const MIN_POINTS: usize = 5;

const ANCHOR_NEIGHBOURHOOD: usize = 3;
const ANGLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakInterval {
    /// First grid index (at `left_outer`).
    pub start: usize,
    /// Last grid index (at `right_outer`), inclusive.
    pub end: usize,
    pub anchor_index: usize,
    pub anchor: f64,
    pub left_outer: f64,
    pub left_inner: f64,
    pub right_inner: f64,
    pub right_outer: f64,
    /// The scan hit the width cap before the derivative flattened.
    pub truncated: bool,
    /// Anchors of other peaks absorbed when overlapping intervals were merged.
    pub merged_anchors: Vec<f64>,
}

impl PeakInterval {
    pub fn width(&self) -> f64 {
        self.right_outer - self.left_outer
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i <= self.end
    }
}

struct Scan {
    inner: usize,
    outer: usize,
    capped: bool,
}

/// Peak intervals from the maxima of `ts` and the derivative of `spl`, whose
/// knots are taken as the grid.
pub fn peak_intervals(ts: &StepFunction, spl: &NaturalCubicSpline) -> Result<Vec<PeakInterval>> {
    let x = spl.knots();
    let n = x.len();
    if ts.n() != n {
        return Err(Error::InvalidInput("step function and spline use different grids"));
    }
    let peaks = ts.peaks();
    if peaks.is_empty() {
        return Ok(Vec::new());
    }
    let deriv: Vec<f64> = x.iter().map(|&t| spl.derivative(t)).collect();
    let abs: Vec<f64> = deriv.iter().map(|d| d.abs()).collect();
    let med = math::median(&abs).unwrap_or(0.0);
    let half = MAX_WIDTH / 2.0;

    let mut raw = Vec::with_capacity(peaks.len());
    for p in &peaks {
        let lo = p.span.start.saturating_sub(ANCHOR_NEIGHBOURHOOD);
        let hi = (p.span.end + ANCHOR_NEIGHBOURHOOD).min(n - 1);
        let t0 = (lo..=hi)
            .min_by(|&a, &b| abs[a].total_cmp(&abs[b]))
            .unwrap_or(lo);
        let left_limit = first_at_or_after(x, x[t0] - half - ANGLE_SLACK);
        let right_limit = last_at_or_before(x, x[t0] + half + ANGLE_SLACK);

        let left = scan(
            (left_limit..t0).rev(),
            left_limit,
            t0,
            |i| deriv[i] > med,
            |i| deriv[i] < -med,
        );
        let right = scan(
            t0 + 1..=right_limit,
            right_limit,
            t0,
            |i| deriv[i] < -med,
            |i| deriv[i] > med,
        );
        let (start, end) = pad(left.outer, right.outer, n, left_limit, right_limit);
        raw.push(PeakInterval {
            start,
            end,
            anchor_index: t0,
            anchor: x[t0],
            left_outer: x[start],
            left_inner: x[left.inner.max(start)],
            right_inner: x[right.inner.min(end)],
            right_outer: x[end],
            truncated: (left.capped && left_limit > 0) || (right.capped && right_limit < n - 1),
            merged_anchors: Vec::new(),
        });
    }
    Ok(merge(raw, x, spl.values()))
}

/// Walks away from the anchor. Before the flank is entered, a turn in the
/// wrong direction ends the scan; inside the flank, any index that is no
/// longer steep in the right direction is the outer boundary.
fn scan(
    indices: impl Iterator<Item = usize>,
    limit: usize,
    anchor: usize,
    steep: impl Fn(usize) -> bool,
    turned: impl Fn(usize) -> bool,
) -> Scan {
    let mut inner = None;
    for i in indices {
        match inner {
            None if steep(i) => inner = Some(i),
            None if turned(i) => {
                return Scan {
                    inner: i,
                    outer: i,
                    capped: false,
                }
            }
            Some(_) if !steep(i) => {
                return Scan {
                    inner: inner.unwrap_or(i),
                    outer: i,
                    capped: false,
                }
            }
            _ => {}
        }
    }
    let outer = if limit == anchor { anchor } else { limit };
    Scan {
        inner: inner.unwrap_or(outer),
        outer,
        capped: true,
    }
}

/// Widens `[start, end]` to at least [`MIN_POINTS`] points inside the cap.
fn pad(mut start: usize, mut end: usize, n: usize, lo: usize, hi: usize) -> (usize, usize) {
    while end - start + 1 < MIN_POINTS.min(hi - lo + 1).min(n) {
        if start > lo && (end - start).is_multiple_of(2) || end >= hi {
            start -= 1;
        } else {
            end += 1;
        }
    }
    (start, end)
}

fn first_at_or_after(x: &[f64], t: f64) -> usize {
    x.partition_point(|&v| v < t)
}

fn last_at_or_before(x: &[f64], t: f64) -> usize {
    x.partition_point(|&v| v <= t).saturating_sub(1)
}

/// Unions overlapping intervals. The anchor with the larger spline value
/// stays primary and the width cap is applied again around it.
fn merge(mut raw: Vec<PeakInterval>, x: &[f64], g: &[f64]) -> Vec<PeakInterval> {
    raw.sort_by_key(|p| p.start);
    let mut out: Vec<PeakInterval> = Vec::with_capacity(raw.len());
    for p in raw {
        match out.last_mut() {
            Some(last) if p.start <= last.end => {
                let (mut keep, other) = if g[p.anchor_index] > g[last.anchor_index] {
                    (p, last.clone())
                } else {
                    (last.clone(), p)
                };
                keep.start = keep.start.min(other.start);
                keep.end = keep.end.max(other.end);
                keep.truncated |= other.truncated;
                keep.merged_anchors.push(other.anchor);
                keep.merged_anchors.extend(other.merged_anchors);
                keep.merged_anchors.sort_by(f64::total_cmp);
                *last = keep;
            }
            _ => out.push(p),
        }
    }
    for p in &mut out {
        let half = MAX_WIDTH / 2.0;
        let lo = first_at_or_after(x, p.anchor - half - ANGLE_SLACK);
        let hi = last_at_or_before(x, p.anchor + half + ANGLE_SLACK);
        if p.start < lo || p.end > hi {
            p.truncated = true;
        }
        p.start = p.start.max(lo);
        p.end = p.end.min(hi);
        p.left_outer = x[p.start];
        p.right_outer = x[p.end];
        p.left_inner = p.left_inner.clamp(p.left_outer, p.anchor);
        p.right_inner = p.right_inner.clamp(p.anchor, p.right_outer);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineConfig {
    pub tau: f64,
    pub spline: AdaptiveSplineConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            spline: AdaptiveSplineConfig::default(),
        }
    }
}

/// Smoothing spline through the data outside all peak intervals. The result
/// has knots only at the kept points but is evaluable on the whole grid.
pub fn baseline_fit(
    d: &Diffractogram,
    peaks: &[PeakInterval],
    scale: &NoiseProfile,
    config: &BaselineConfig,
) -> Result<AdaptiveSplineFit> {
    let n = d.len();
    if scale.len() != n {
        return Err(Error::InvalidInput("noise scale and data differ in length"));
    }
    if peaks.iter().any(|p| p.start > p.end || p.end >= n) {
        return Err(Error::InvalidInput("peak interval outside the grid"));
    }
    let mut inside = alloc::vec![false; n];
    for p in peaks {
        inside[p.start..=p.end].fill(true);
    }
    let kept: Vec<usize> = (0..n).filter(|&i| !inside[i]).collect();
    if kept.len() < 3 {
        return Err(Error::InvalidInput("peak intervals leave fewer than three baseline points"));
    }
    let x: Vec<f64> = kept.iter().map(|&i| d.angles()[i]).collect();
    let y: Vec<f64> = kept.iter().map(|&i| d.counts()[i]).collect();
    let m = kept.len();
    fit_adaptive_weights(
        &x,
        &y,
        &scale.select(&kept),
        &IntervalScheme::dyadic(m),
        multiscale::threshold(m, config.tau),
        &config.spline,
    )
}
