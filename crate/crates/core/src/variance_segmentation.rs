//! Piecewise-constant estimate of a heteroscedastic noise level.
//!
//! For `V_i = σ_i Z_i`, the sum `Σ_{i∈I} V_i²/σ_i²` is `χ²_{|I|}`. A scale
//! function `s` is admissible when that sum lies between the lower and upper
//! `α_n` chi-square quantiles for every interval. The greedy sweep grows each
//! constancy interval for as long as its own RMS level stays admissible.

use alloc::vec::Vec;

use crate::math;
use crate::multiscale::Interval;
use crate::{Error, Result, SIGMA_FLOOR};

/// Default `τ` of the chi-square band.
pub const DEFAULT_TAU: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseConstantScale {
    /// Zero-based start index of every segment; the first is 0.
    pub breakpoints: Vec<usize>,
    pub levels: Vec<f64>,
    pub len: usize,
}

impl PiecewiseConstantScale {
    pub fn segments(&self) -> usize {
        self.levels.len()
    }

    pub fn segment_bounds(&self, k: usize) -> Interval {
        let end = self.breakpoints.get(k + 1).map_or(self.len, |&b| b) - 1;
        Interval::new(self.breakpoints[k], end)
    }

    /// Level at every point.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        for k in 0..self.segments() {
            let iv = self.segment_bounds(k);
            out.extend(core::iter::repeat_n(self.levels[k], iv.len()));
        }
        out
    }
}

/// Upper tail mass `1 − α_n = exp(−½ τ ln n)/√(π τ ln n)`.
pub fn alpha_n_tail(n: usize, tau: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput("alpha_n needs n >= 2"));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive"));
    }
    let l = libm::log(n as f64);
    Ok(libm::exp(-0.5 * tau * l) / libm::sqrt(core::f64::consts::PI * tau * l))
}

pub fn alpha_n(n: usize, tau: f64) -> Result<f64> {
    alpha_n_tail(n, tau).map(|t| 1.0 - t)
}

/// Lower and upper chi-square quantiles indexed by interval length.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareBand {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ChiSquareBand {
    /// Band for interval lengths `1..=max_len` with two-sided tail mass
    /// `tail = 1 − α` in each direction.
    pub fn new(max_len: usize, tail: f64) -> Result<Self> {
        if !(tail > 0.0 && tail < 0.5) {
            return Err(Error::InvalidInput("band tail mass must lie in (0, 0.5)"));
        }
        let mut lower = Vec::with_capacity(max_len + 1);
        let mut upper = Vec::with_capacity(max_len + 1);
        lower.push(0.0);
        upper.push(0.0);
        for k in 1..=max_len {
            lower.push(math::chisq_quantile(tail, k as f64));
            upper.push(math::chisq_upper_quantile(tail, k as f64));
        }
        Ok(Self { lower, upper })
    }

    /// Band at level `α_n` for a sample of size `n`.
    pub fn for_sample(n: usize, tau: f64) -> Result<Self> {
        Self::new(n, alpha_n_tail(n, tau)?)
    }

    pub fn max_len(&self) -> usize {
        self.lower.len() - 1
    }

    pub fn lower(&self, len: usize) -> f64 {
        self.lower[len]
    }

    pub fn upper(&self, len: usize) -> f64 {
        self.upper[len]
    }

    #[inline]
    fn admits(&self, len: usize, normalized_sum: f64) -> bool {
        self.lower[len] <= normalized_sum && normalized_sum <= self.upper[len]
    }
}

/// `qchisq(1 − α, |I|) ≤ Σ_{i∈I} v_i²/s_i² ≤ qchisq(α, |I|)`.
pub fn chisq_band_check(v: &[f64], s: &[f64], interval: Interval, alpha: f64) -> Result<bool> {
    if v.len() != s.len() {
        return Err(Error::InvalidInput("v and s differ in length"));
    }
    if s.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInput("scale must be positive"));
    }
    if interval.end >= v.len() {
        return Err(Error::InvalidInput("interval out of range"));
    }
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidInput("alpha must lie in (0.5, 1)"));
    }
    let sum: f64 = (interval.start..=interval.end)
        .map(|i| (v[i] / s[i]) * (v[i] / s[i]))
        .sum();
    let k = interval.len() as f64;
    let tail = 1.0 - alpha;
    Ok(math::chisq_quantile(tail, k) <= sum && sum <= math::chisq_upper_quantile(tail, k))
}

/// Windows up to this length are summed directly: the lower band edge for a
/// single point is of order 1e-12, below the rounding error of a difference
/// of long prefix sums.
const SHORT_WINDOW: usize = 8;

fn prefix_sums(sq: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(sq.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for x in sq {
        acc += x;
        prefix.push(acc);
    }
    prefix
}

/// Sum of `sq[end - len..end]`.
#[inline]
fn window_sum(sq: &[f64], prefix: &[f64], end: usize, len: usize) -> f64 {
    if len <= SHORT_WINDOW {
        sq[end - len..end].iter().sum()
    } else {
        prefix[end] - prefix[end - len]
    }
}

/// Whether `s` lies in the band for every subinterval of `v`.
///
/// The largest and smallest window sums of `v²/s²` grow with the window
/// length, and so do both band edges. A whole range of lengths `[a, b]` is
/// therefore certified once `max_b ≤ upper(a)` and `min_a ≥ lower(b)`;
/// otherwise the range is split. Worst case O(n²), typically far less.
pub fn band_covers(v: &[f64], s: &[f64], band: &ChiSquareBand) -> bool {
    assert_eq!(v.len(), s.len());
    assert!(band.max_len() >= v.len());
    let n = v.len();
    if n == 0 {
        return true;
    }
    let sq: Vec<f64> = v.iter().zip(s).map(|(vi, si)| (vi / si) * (vi / si)).collect();
    let prefix = prefix_sums(&sq);
    let extremes = |len: usize| {
        (len..=n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), end| {
            let w = window_sum(&sq, &prefix, end, len);
            (lo.min(w), hi.max(w))
        })
    };
    let mut stack = alloc::vec![(1usize, extremes(1), n, extremes(n))];
    while let Some((a, ea, b, eb)) = stack.pop() {
        if !band.admits(a, ea.0) || !band.admits(a, ea.1) || !band.admits(b, eb.0) || !band.admits(b, eb.1) {
            return false;
        }
        if b - a <= 1 || (eb.1 <= band.upper[a] && ea.0 >= band.lower[b]) {
            continue;
        }
        let mid = a + (b - a) / 2;
        let em = extremes(mid);
        stack.push((a, ea, mid, em));
        stack.push((mid, em, b, eb));
    }
    true
}

/// Greedy sweep at level `α` (see [`alpha_n`]).
pub fn greedy_segmentation(v: &[f64], alpha: f64) -> Result<PiecewiseConstantScale> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::InvalidInput("alpha must lie in (0.5, 1)"));
    }
    let band = ChiSquareBand::new(v.len(), 1.0 - alpha)?;
    greedy_segmentation_with_band(v, &band)
}

/// Greedy sweep with a precomputed band covering lengths up to `v.len()`.
///
/// Each segment `J = [start, k]` is extended by one point while, at the RMS
/// level of the extended segment, every subinterval of it stays inside the
/// band. The minimum and maximum window sum of every length are maintained
/// incrementally, so each extension costs O(|J|) and the check is exact.
pub fn greedy_segmentation_with_band(v: &[f64], band: &ChiSquareBand) -> Result<PiecewiseConstantScale> {
    let n = v.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty input"));
    }
    if band.max_len() < n {
        return Err(Error::InvalidInput("band does not cover the sample length"));
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let prefix = prefix_sums(&sq);
    let floor2 = SIGMA_FLOOR * SIGMA_FLOOR;

    let mut breakpoints = Vec::new();
    let mut levels = Vec::new();
    // min_ss[m - 1] / max_ss[m - 1]: extreme window sums of length m inside J.
    let mut min_ss: Vec<f64> = Vec::new();
    let mut max_ss: Vec<f64> = Vec::new();

    let mut start = 0;
    while start < n {
        min_ss.clear();
        max_ss.clear();
        let first = v[start] * v[start];
        min_ss.push(first);
        max_ss.push(first);
        let mut end = start;

        while end + 1 < n {
            let next = end + 1;
            let len = next - start + 1;
            let s2 = (window_sum(&sq, &prefix, next + 1, len) / len as f64).max(floor2);
            let admissible = (1..=len).all(|m| {
                let w = window_sum(&sq, &prefix, next + 1, m);
                let (lo, hi) = if m < len {
                    (min_ss[m - 1].min(w), max_ss[m - 1].max(w))
                } else {
                    (w, w)
                };
                band.admits(m, lo / s2) && band.admits(m, hi / s2)
            });
            if !admissible {
                break;
            }
            for m in 1..len {
                let w = window_sum(&sq, &prefix, next + 1, m);
                min_ss[m - 1] = min_ss[m - 1].min(w);
                max_ss[m - 1] = max_ss[m - 1].max(w);
            }
            let whole = window_sum(&sq, &prefix, next + 1, len);
            min_ss.push(whole);
            max_ss.push(whole);
            end = next;
        }

        let len = end - start + 1;
        let level = libm::sqrt(window_sum(&sq, &prefix, end + 1, len) / len as f64).max(SIGMA_FLOOR);
        breakpoints.push(start);
        levels.push(level);
        start = end + 1;
    }

    Ok(PiecewiseConstantScale {
        breakpoints,
        levels,
        len: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn alpha_n_reference() {
        let a = alpha_n(1000, 3.0).unwrap();
        assert!((a - 0.999_996_080_813_192_2).abs() < 1e-12);
        assert!(((1.0 - a) - 3.92e-6).abs() < 1e-8);
        let mut prev = 0.0;
        for n in [2usize, 10, 100, 1000, 10_000, 100_000] {
            let a = alpha_n(n, 3.0).unwrap();
            assert!(a > prev);
            prev = a;
        }
        assert!(alpha_n(1, 3.0).is_err());
    }

    #[test]
    fn band_check_examples() {
        let alpha = alpha_n(1000, 3.0).unwrap();
        assert!(!chisq_band_check(&[0.0; 5], &[1.0; 5], Interval::new(0, 4), alpha).unwrap());
        assert!(chisq_band_check(&[-3.0, 2.0], &[3.0, 2.0], Interval::new(0, 0), 0.9).unwrap());
        assert!(chisq_band_check(&[1.0], &[0.0], Interval::new(0, 0), alpha).is_err());
    }

    #[test]
    fn singleton_segmentation() {
        let s = greedy_segmentation(&[-4.0], 0.99).unwrap();
        assert_eq!(s.breakpoints, vec![0]);
        assert_eq!(s.levels, vec![4.0]);
    }

    #[test]
    fn segments_partition_the_index_set() {
        let v = [1.0, -1.2, 0.8, 30.0, -25.0, 28.0, 0.5, -0.7];
        let s = greedy_segmentation(&v, 0.999).unwrap();
        assert_eq!(s.breakpoints[0], 0);
        assert!(s.breakpoints.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s.expand().len(), v.len());
        assert!(s.levels.iter().all(|&l| l > 0.0));
    }
}
