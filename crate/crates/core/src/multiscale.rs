//! The residual-based approximation region.
//!
//! A candidate function `g` is an adequate approximation of the data when the
//! standardized residual sums `(1/√|I|) Σ_{i∈I} (y_i − g_i)/Σ_i` stay below a
//! threshold for every interval `I` of an interval scheme. The dyadic scheme is
//! used for whole spectra; the all-subintervals scheme for short peak segments.

use alloc::vec::Vec;

use crate::math::{self, NORMAL_Q75};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Photon counts on a strictly increasing grid of diffraction angles (°2θ).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diffractogram {
    angles: Vec<f64>,
    counts: Vec<f64>,
}

impl Diffractogram {
    pub fn new(angles: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if angles.len() != counts.len() {
            return Err(Error::InvalidInput("angles and counts differ in length"));
        }
        if angles.len() < 2 {
            return Err(Error::InvalidInput("a diffractogram needs at least two points"));
        }
        if angles.iter().chain(&counts).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value"));
        }
        if angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("angles must be strictly increasing"));
        }
        if counts.iter().any(|&c| c < 0.0) {
            return Err(Error::InvalidInput("counts must be nonnegative"));
        }
        Ok(Self { angles, counts })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Median spacing of the angle grid.
    pub fn grid_step(&self) -> f64 {
        let steps: Vec<f64> = self.angles.windows(2).map(|w| w[1] - w[0]).collect();
        math::median(&steps).unwrap_or(0.0)
    }
}

/// Closed index range `[start, end]`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SchemeKind {
    Dyadic,
    AllSubintervals,
}

/// Family of intervals on which residual sums are tested.
///
/// The all-subintervals family is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalScheme {
    kind: SchemeKind,
    n: usize,
    dyadic: Vec<Interval>,
}

impl IntervalScheme {
    /// Singletons, left-aligned blocks of 2, 4, 8, … points, and at every
    /// level the trailing partial block; the top level is the whole range.
    pub fn dyadic(n: usize) -> Self {
        let mut intervals = Vec::new();
        if n > 0 {
            let mut width = 1usize;
            loop {
                let mut start = 0;
                while start < n {
                    let end = (start + width).min(n) - 1;
                    intervals.push(Interval::new(start, end));
                    start += width;
                }
                if width >= n {
                    break;
                }
                width *= 2;
            }
            // Trailing partial blocks repeat across levels.
            intervals.sort_unstable_by_key(|i| (i.len(), i.start));
            intervals.dedup();
        }
        Self {
            kind: SchemeKind::Dyadic,
            n,
            dyadic: intervals,
        }
    }

    pub fn all_subintervals(n: usize) -> Self {
        Self {
            kind: SchemeKind::AllSubintervals,
            n,
            dyadic: Vec::new(),
        }
    }

    pub fn new(kind: SchemeKind, n: usize) -> Self {
        match kind {
            SchemeKind::Dyadic => Self::dyadic(n),
            SchemeKind::AllSubintervals => Self::all_subintervals(n),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    /// Number of points the scheme covers.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        match self.kind {
            SchemeKind::Dyadic => self.dyadic.len(),
            SchemeKind::AllSubintervals => self.n * (self.n + 1) / 2,
        }
    }

    pub fn for_each(&self, mut f: impl FnMut(Interval)) {
        match self.kind {
            SchemeKind::Dyadic => self.dyadic.iter().copied().for_each(f),
            SchemeKind::AllSubintervals => {
                for start in 0..self.n {
                    for end in start..self.n {
                        f(Interval::new(start, end));
                    }
                }
            }
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.count());
        self.for_each(|i| out.push(i));
        out
    }
}

/// Per-point noise scale `Σ(t_i)`; every entry is strictly positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct NoiseProfile {
    scale: Vec<f64>,
}

impl NoiseProfile {
    pub fn new(scale: Vec<f64>) -> Result<Self> {
        if scale.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("noise scale entries must be positive"));
        }
        Ok(Self { scale })
    }

    pub fn constant(n: usize, sigma: f64) -> Result<Self> {
        Self::new(alloc::vec![sigma; n])
    }

    pub fn unit(n: usize) -> Self {
        Self {
            scale: alloc::vec![1.0; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scale
    }

    pub fn len(&self) -> usize {
        self.scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scale.is_empty()
    }

    /// Restriction to the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            scale: indices.iter().map(|&i| self.scale[i]).collect(),
        }
    }

    pub fn slice(&self, interval: Interval) -> Self {
        Self {
            scale: self.scale[interval.start..=interval.end].to_vec(),
        }
    }
}

/// Tuning of the residual criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriterionConfig {
    pub tau: f64,
    pub alpha: f64,
    pub seed: u64,
    pub replicates: usize,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            alpha: 0.95,
            seed: 0x5eed_d1ff,
            replicates: 100_000,
        }
    }
}

impl CriterionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput("alpha must lie in (0, 1)"));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("at least one replicate is required"));
        }
        Ok(())
    }
}

/// `√(τ ln n)`, the asymptotic threshold for the dyadic scheme.
pub fn threshold(n: usize, tau: f64) -> f64 {
    libm::sqrt(tau * libm::log(n as f64))
}

/// Noise level from the median absolute difference of neighbouring counts,
/// scaled to be consistent for Gaussian noise. Uses the differences
/// `y_i − y_{i−1}` for `2 ≤ i ≤ n − 1` (one-based).
///
/// Returns 0 on constant data; callers clamp with [`crate::SIGMA_FLOOR`].
pub fn global_scale_estimate(d: &Diffractogram) -> Result<f64> {
    scale_from_differences(d.counts())
}

pub fn scale_from_differences(y: &[f64]) -> Result<f64> {
    let n = y.len();
    if n < 3 {
        return Err(Error::InvalidInput("scale estimate needs at least three points"));
    }
    let diffs: Vec<f64> = (1..n - 1).map(|i| (y[i] - y[i - 1]).abs()).collect();
    let med = math::median(&diffs).unwrap_or(0.0);
    Ok(med / (NORMAL_Q75 * core::f64::consts::SQRT_2))
}

/// `Σ_i = max(floor_i, √max(f_i, 0))`.
pub fn local_scale(f: &[f64], floor: &[f64]) -> Result<NoiseProfile> {
    if f.len() != floor.len() {
        return Err(Error::InvalidInput("signal and floor differ in length"));
    }
    if floor.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidInput("floor entries must be positive"));
    }
    NoiseProfile::new(
        f.iter()
            .zip(floor)
            .map(|(&fi, &si)| si.max(libm::sqrt(fi.max(0.0))))
            .collect(),
    )
}

/// Prefix sums of standardized residuals, `P[0] = 0`.
fn standardized_prefix(residuals: &[f64], scale: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(residuals.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for (r, s) in residuals.iter().zip(scale) {
        acc += r / s;
        prefix.push(acc);
    }
    prefix
}

#[inline]
fn interval_stat(prefix: &[f64], start: usize, end: usize) -> f64 {
    (prefix[end + 1] - prefix[start]) / libm::sqrt((end - start + 1) as f64)
}

fn check_lengths(residuals: &[f64], scale: &NoiseProfile) -> Result<()> {
    if residuals.len() != scale.len() {
        return Err(Error::InvalidInput("residuals and scale differ in length"));
    }
    Ok(())
}

/// `(1/√|I|) Σ_{i∈I} r_i/Σ_i`.
pub fn multires_statistic(residuals: &[f64], interval: Interval, scale: &NoiseProfile) -> Result<f64> {
    check_lengths(residuals, scale)?;
    if interval.start > interval.end || interval.end >= residuals.len() {
        return Err(Error::InvalidInput("interval out of range"));
    }
    let s = scale.as_slice();
    let sum: f64 = (interval.start..=interval.end).map(|i| residuals[i] / s[i]).sum();
    Ok(sum / libm::sqrt(interval.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adequacy {
    pub adequate: bool,
    pub violating: Vec<Interval>,
    /// Largest absolute statistic over the scheme.
    pub max_abs: f64,
}

/// Tests every interval of the scheme against the threshold.
pub fn adequacy_check(
    residuals: &[f64],
    scheme: &IntervalScheme,
    scale: &NoiseProfile,
    threshold: f64,
) -> Result<Adequacy> {
    check_lengths(residuals, scale)?;
    if scheme.n() != residuals.len() {
        return Err(Error::InvalidInput("scheme does not match the residual length"));
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidInput("threshold must be positive"));
    }
    let prefix = standardized_prefix(residuals, scale.as_slice());
    let mut violating = Vec::new();
    let mut max_abs = 0.0_f64;
    scheme.for_each(|iv| {
        let w = interval_stat(&prefix, iv.start, iv.end).abs();
        max_abs = max_abs.max(w);
        if w > threshold {
            violating.push(iv);
        }
    });
    Ok(Adequacy {
        adequate: violating.is_empty(),
        violating,
        max_abs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubintervalMax {
    pub value: f64,
    pub argmax: Interval,
}

/// Maximum of `|multires_statistic|` over all subintervals.
///
/// Scans by interval length and stops once `range(P)/√len` cannot beat the
/// running maximum. Every candidate is evaluated with the same expression as
/// [`max_subinterval_stat_exhaustive`], so both return identical values.
pub fn max_subinterval_stat(residuals: &[f64], scale: &NoiseProfile) -> Result<SubintervalMax> {
    check_lengths(residuals, scale)?;
    if residuals.is_empty() {
        return Err(Error::InvalidInput("empty residual vector"));
    }
    let prefix = standardized_prefix(residuals, scale.as_slice());
    Ok(pruned_max(&prefix))
}

fn pruned_max(prefix: &[f64]) -> SubintervalMax {
    let n = prefix.len() - 1;
    let (lo, hi) = prefix
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let range = hi - lo;
    let mut best = SubintervalMax {
        value: f64::NEG_INFINITY,
        argmax: Interval::new(0, 0),
    };
    for len in 1..=n {
        if best.value >= range / libm::sqrt(len as f64) {
            break;
        }
        for start in 0..=n - len {
            let end = start + len - 1;
            let w = interval_stat(prefix, start, end).abs();
            if w > best.value {
                best = SubintervalMax {
                    value: w,
                    argmax: Interval::new(start, end),
                };
            }
        }
    }
    best
}

/// Plain O(L²) enumeration of all subintervals; the reference contract for
/// [`max_subinterval_stat`].
pub fn max_subinterval_stat_exhaustive(
    residuals: &[f64],
    scale: &NoiseProfile,
) -> Result<SubintervalMax> {
    check_lengths(residuals, scale)?;
    if residuals.is_empty() {
        return Err(Error::InvalidInput("empty residual vector"));
    }
    let prefix = standardized_prefix(residuals, scale.as_slice());
    let n = residuals.len();
    let mut best = SubintervalMax {
        value: f64::NEG_INFINITY,
        argmax: Interval::new(0, 0),
    };
    for start in 0..n {
        for end in start..n {
            let w = interval_stat(&prefix, start, end).abs();
            if w > best.value {
                best = SubintervalMax {
                    value: w,
                    argmax: Interval::new(start, end),
                };
            }
        }
    }
    Ok(best)
}

fn gaussian_prefix(len: usize, rng: &mut Rng) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(len + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for _ in 0..len {
        acc += rng::standard_normal(rng);
        prefix.push(acc);
    }
    prefix
}

/// Maximum statistic of one pure-noise replicate. Replicate `r` draws from
/// stream `r` of `seed`.
pub fn noise_max_statistic(len: usize, scheme: &IntervalScheme, seed: u64, replicate: u64) -> f64 {
    debug_assert_eq!(scheme.n(), len);
    let mut rng = rng::stream(seed, replicate);
    let prefix = gaussian_prefix(len, &mut rng);
    match scheme.kind() {
        SchemeKind::AllSubintervals => pruned_max(&prefix).value,
        SchemeKind::Dyadic => {
            let mut m = 0.0_f64;
            scheme.for_each(|iv| m = m.max(interval_stat(&prefix, iv.start, iv.end).abs()));
            m
        }
    }
}

/// α-quantile of the maximal standardized noise sum over the scheme, by
/// Monte Carlo. Deterministic given `seed`.
pub fn threshold_quantile(len: usize, kind: SchemeKind, alpha: f64, seed: u64, replicates: usize) -> Result<f64> {
    if len == 0 {
        return Err(Error::InvalidInput("length must be positive"));
    }
    if !(alpha > 0.0 && alpha < 1.0) || replicates == 0 {
        return Err(Error::InvalidInput("alpha must lie in (0, 1) with replicates > 0"));
    }
    let scheme = IntervalScheme::new(kind, len);
    let mut maxima: Vec<f64> = (0..replicates as u64)
        .map(|r| noise_max_statistic(len, &scheme, seed, r))
        .collect();
    maxima.sort_unstable_by(f64::total_cmp);
    Ok(math::empirical_quantile(&maxima, alpha))
}

/// For one pure-noise replicate of length `max_len`, the all-subinterval
/// maxima of every prefix: entry `L − 1` is the maximum over subintervals of
/// the first `L` points. Nondecreasing in `L` by construction.
pub fn nested_noise_maxima(max_len: usize, seed: u64, replicate: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, replicate);
    let prefix = gaussian_prefix(max_len, &mut rng);
    nested_prefix_maxima(&prefix)
}

fn nested_prefix_maxima(prefix: &[f64]) -> Vec<f64> {
    let n = prefix.len() - 1;
    let mut out = Vec::with_capacity(n);
    let mut best = 0.0_f64;
    let (mut lo, mut hi) = (prefix[0], prefix[0]);
    for end in 0..n {
        lo = lo.min(prefix[end + 1]);
        hi = hi.max(prefix[end + 1]);
        let range = hi - lo;
        for len in 1..=end + 1 {
            if best >= range / libm::sqrt(len as f64) {
                break;
            }
            let w = interval_stat(prefix, end + 1 - len, end).abs();
            if w > best {
                best = w;
            }
        }
        out.push(best);
    }
    out
}

/// Critical values `C_L` for `L = 1..=max_len` of the all-subintervals
/// criterion: α-quantiles of [`nested_noise_maxima`] across replicates.
pub fn subinterval_critical_values(max_len: usize, alpha: f64, seed: u64, replicates: usize) -> Result<Vec<f64>> {
    if max_len == 0 || replicates == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput("invalid critical value request"));
    }
    let runs: Vec<Vec<f64>> = (0..replicates as u64)
        .map(|r| nested_noise_maxima(max_len, seed, r))
        .collect();
    Ok(quantiles_by_length(&runs, alpha))
}

/// Column-wise α-quantiles of replicate rows, as produced by
/// [`nested_noise_maxima`].
pub fn quantiles_by_length(runs: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let max_len = runs.first().map_or(0, Vec::len);
    let mut column = Vec::with_capacity(runs.len());
    (0..max_len)
        .map(|l| {
            column.clear();
            column.extend(runs.iter().map(|r| r[l]));
            column.sort_unstable_by(f64::total_cmp);
            math::empirical_quantile(&column, alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn diff(counts: Vec<f64>) -> Diffractogram {
        let angles = (0..counts.len()).map(|i| i as f64).collect();
        Diffractogram::new(angles, counts).unwrap()
    }

    #[test]
    fn diffractogram_validation() {
        assert!(Diffractogram::new(vec![1.0], vec![1.0]).is_err());
        assert!(Diffractogram::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(Diffractogram::new(vec![1.0, 2.0], vec![1.0, -2.0]).is_err());
        assert!(Diffractogram::new(vec![1.0, 2.0], vec![1.0]).is_err());
    }

    #[test]
    fn scale_of_constant_and_alternating_data() {
        assert_eq!(global_scale_estimate(&diff(vec![5.0; 4])).unwrap(), 0.0);
        let c = 3.0;
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.0 } else { c }).collect();
        let s = global_scale_estimate(&diff(alt)).unwrap();
        assert!((s - c / (0.674_490 * core::f64::consts::SQRT_2)).abs() < 1e-5);
        assert!((s / c - 1.0484).abs() < 1e-4);
        assert!(global_scale_estimate(&diff(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn local_scale_examples() {
        let p = local_scale(&[0.0, 100.0, 49.0, -3.0], &[7.0; 4]).unwrap();
        assert_eq!(p.as_slice(), &[7.0, 10.0, 7.0, 7.0]);
        assert!(local_scale(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn statistic_examples() {
        let unit = NoiseProfile::unit(4);
        assert_eq!(multires_statistic(&[0.0; 4], Interval::new(0, 3), &unit).unwrap(), 0.0);
        assert_eq!(multires_statistic(&[0.0, 2.5, 0.0, 0.0], Interval::new(1, 1), &unit).unwrap(), 2.5);
        assert_eq!(multires_statistic(&[1.0; 4], Interval::new(0, 3), &unit).unwrap(), 2.0);
        assert!(multires_statistic(&[1.0; 4], Interval::new(2, 4), &unit).is_err());
    }

    #[test]
    fn dyadic_scheme_shape() {
        let s = IntervalScheme::dyadic(5);
        let iv = s.intervals();
        for i in 0..5 {
            assert!(iv.contains(&Interval::new(i, i)));
        }
        for expected in [(0, 1), (2, 3), (0, 3), (0, 4)] {
            assert!(iv.contains(&Interval::new(expected.0, expected.1)));
        }
        assert_eq!(iv.len(), 9);
        for n in 1..300 {
            let s = IntervalScheme::dyadic(n);
            assert!(s.count() <= 2 * n, "n = {n}: {}", s.count());
            assert!(s.intervals().contains(&Interval::new(0, n - 1)));
        }
    }

    #[test]
    fn adequacy_examples() {
        let n = 7001;
        let t = threshold(n, 2.5);
        assert!((t - 4.7047).abs() < 1e-4);
        let scheme = IntervalScheme::dyadic(n);
        let unit = NoiseProfile::unit(n);
        let ok = adequacy_check(&vec![0.0; n], &scheme, &unit, t).unwrap();
        assert!(ok.adequate && ok.violating.is_empty());
        let mut r = vec![0.0; n];
        r[1234] = 10.0;
        let bad = adequacy_check(&r, &scheme, &unit, t).unwrap();
        assert!(!bad.adequate);
        assert!(bad.violating.contains(&Interval::new(1234, 1234)));
    }

    #[test]
    fn subinterval_max_small_example() {
        let unit = NoiseProfile::unit(2);
        let m = max_subinterval_stat(&[3.0, -3.0], &unit).unwrap();
        assert_eq!(m.value, 3.0);
        assert_eq!(m.argmax.len(), 1);
        assert_eq!(max_subinterval_stat(&[0.0; 6], &NoiseProfile::unit(6)).unwrap().value, 0.0);
        assert!(max_subinterval_stat(&[], &NoiseProfile::unit(0)).is_err());
    }

    #[test]
    fn single_point_quantile_is_normal_quantile() {
        let q = threshold_quantile(1, SchemeKind::AllSubintervals, 0.95, 11, 100_000).unwrap();
        assert!((q - 1.960).abs() < 0.02, "{q}");
    }

    #[test]
    fn nested_maxima_match_direct_computation() {
        let nested = nested_noise_maxima(40, 3, 9);
        let mut rng = rng::stream(3, 9);
        let z: Vec<f64> = (0..40).map(|_| rng::standard_normal(&mut rng)).collect();
        for len in [1, 2, 7, 40] {
            let direct = max_subinterval_stat_exhaustive(&z[..len], &NoiseProfile::unit(len)).unwrap();
            assert_eq!(nested[len - 1], direct.value);
        }
    }
}
