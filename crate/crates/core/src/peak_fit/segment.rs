use alloc::vec::Vec;

use super::bfgs::{self, BfgsConfig};
use super::objective::{wls_objective, SegmentData};
use super::transform::{ParamTransform, Params};
use super::{peak_stats, PearsonComponent, PeakStats};
use crate::multiscale::{max_subinterval_stat, NoiseProfile};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    pub max_k: usize,
    pub restarts_per_k: usize,
    /// Accepted fits to collect at the first accepted `k`.
    pub n_solutions: usize,
    pub seed: u64,
    /// Relative parameter distance below which two accepted fits are the same.
    pub dedup_tol: f64,
    /// Intercept bound as a fraction of the baseline at the segment center.
    pub tilt_fraction: f64,
    /// Slope bound, counts per degree.
    pub max_tilt_slope: f64,
    pub bfgs: BfgsConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_k: 4,
            restarts_per_k: 200,
            n_solutions: 3,
            seed: 0,
            dedup_tol: 1e-4,
            tilt_fraction: 0.05,
            max_tilt_slope: 5.0,
            bfgs: BfgsConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_k == 0 || self.restarts_per_k == 0 || self.n_solutions == 0 {
            return Err(Error::InvalidInput("kernel, restart and solution budgets must be positive"));
        }
        if !(self.dedup_tol >= 0.0) || !(self.tilt_fraction > 0.0) || !(self.max_tilt_slope > 0.0) {
            return Err(Error::InvalidInput("invalid tolerance or tilt bound"));
        }
        Ok(())
    }
}

/// Decomposition of one segment into `k` kernels plus a linear tilt.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentFit {
    pub k: usize,
    pub beta0: f64,
    pub beta1: f64,
    /// Tilt reference angle: the tilt is `β₀ + β₁ (t − center)`.
    pub center: f64,
    /// Sorted by location.
    pub components: Vec<PearsonComponent>,
    pub stats: Vec<PeakStats>,
    pub accepted: bool,
    /// Weighted residual sum of squares.
    pub objective: f64,
    /// Largest standardized residual sum over all subintervals.
    pub statistic: f64,
    pub critical: f64,
    pub restart: usize,
    pub iterations: usize,
}

impl SegmentFit {
    pub fn params(&self) -> Params {
        Params {
            beta0: self.beta0,
            beta1: self.beta1,
            components: self.components.clone(),
        }
    }
}

pub fn model_eval(t: f64, fit: &SegmentFit) -> f64 {
    super::objective::params_eval(t, &fit.params(), fit.center)
}

/// `Σ̃_j = max(floor_j, √(baseline_j + f_pk(t_j)))`.
pub fn acceptance_scale(fit: &SegmentFit, data: &SegmentData) -> Vec<f64> {
    data.angles
        .iter()
        .zip(&data.baseline)
        .zip(&data.floor)
        .map(|((&t, &bl), &floor)| floor.max(libm::sqrt((bl + model_eval(t, fit)).max(0.0))))
        .collect()
}

pub fn acceptance_statistic(fit: &SegmentFit, data: &SegmentData) -> Result<f64> {
    let residuals: Vec<f64> = data
        .angles
        .iter()
        .zip(&data.excess)
        .map(|(&t, &y)| y - model_eval(t, fit))
        .collect();
    let scale = NoiseProfile::new(acceptance_scale(fit, data))?;
    Ok(max_subinterval_stat(&residuals, &scale)?.value)
}

/// Tilt bounds `(d₀, d₁)` for a segment.
pub fn tilt_bounds(data: &SegmentData, config: &FitConfig) -> (f64, f64) {
    let mid = data.baseline[data.len() / 2];
    (
        (config.tilt_fraction * mid.abs()).max(crate::SIGMA_FLOOR),
        config.max_tilt_slope,
    )
}

fn random_start(tr: &ParamTransform, data: &SegmentData, rng: &mut rng::Rng) -> Params {
    let top = data.excess.iter().fold(0.0_f64, |m, &v| m.max(v)).max(1.0);
    let step = data
        .angles
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let a_hi = (0.5 * (tr.hi - tr.lo)).max(step * (1.0 + 1e-9));
    let mut mus: Vec<f64> = (0..tr.k).map(|_| rng::uniform_open(rng, tr.lo, tr.hi)).collect();
    mus.sort_by(f64::total_cmp);
    let components = mus
        .into_iter()
        .map(|mu| {
            let gamma = rng::uniform_open(rng, 0.0, 2.0 * top);
            let a = rng::uniform_open(rng, step, a_hi);
            let m = libm::pow(100.0, rng::uniform_open(rng, 0.0, 1.0));
            PearsonComponent { gamma, mu, m, a }
        })
        .collect();
    Params {
        beta0: 0.0,
        beta1: 0.0,
        components,
    }
}

fn distance(a: &SegmentFit, b: &SegmentFit) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
    let mut d = rel(a.beta0, b.beta0).max(rel(a.beta1, b.beta1));
    for (x, y) in a.components.iter().zip(&b.components) {
        d = d
            .max(rel(x.gamma, y.gamma))
            .max(rel(x.mu, y.mu))
            .max(rel(x.m, y.m))
            .max(rel(x.a, y.a));
    }
    d
}

/// One local minimization from the `restart`-th random start for `k` kernels.
pub fn fit_once(data: &SegmentData, k: usize, restart: usize, critical: f64, config: &FitConfig) -> Result<Option<SegmentFit>> {
    let (d0, d1) = tilt_bounds(data, config);
    let tr = ParamTransform::new(k, data.lo(), data.hi(), d0, d1)?;
    let mut rng = rng::stream(config.seed, ((k as u64) << 32) | restart as u64);
    let raw = loop {
        if let Ok(raw) = tr.inverse(&random_start(&tr, data, &mut rng)) {
            break raw;
        }
    };
    let min = bfgs::minimize(|x, g| wls_objective(&tr, data, x, g), raw, &config.bfgs);
    if !min.f.is_finite() {
        return Ok(None);
    }
    let p = tr.forward(&min.x);
    if p.components.windows(2).any(|w| !(w[1].mu > w[0].mu)) {
        return Ok(None);
    }
    let stats = p.components.iter().map(peak_stats).collect::<Result<Vec<_>>>()?;
    let mut fit = SegmentFit {
        k,
        beta0: p.beta0,
        beta1: p.beta1,
        center: data.center(),
        components: p.components,
        stats,
        accepted: false,
        objective: min.f,
        statistic: f64::NAN,
        critical,
        restart,
        iterations: min.iterations,
    };
    fit.statistic = acceptance_statistic(&fit, data)?;
    fit.accepted = fit.statistic <= critical;
    Ok(Some(fit))
}

/// Decomposes a segment with the fewest kernels that pass the all-subintervals
/// criterion at `critical`. The result lists the accepted fits at that `k`
/// (best objective first), followed by the best rejected fit for every
/// smaller `k`; without any acceptance up to `max_k` only rejected fits are
/// returned.
pub fn fit_segment(data: &SegmentData, critical: f64, config: &FitConfig) -> Result<Vec<SegmentFit>> {
    config.validate()?;
    if !(critical > 0.0) {
        return Err(Error::InvalidInput("critical value must be positive"));
    }
    let mut rejected: Vec<SegmentFit> = Vec::new();
    for k in 1..=config.max_k {
        let mut accepted: Vec<SegmentFit> = Vec::new();
        let mut best: Option<SegmentFit> = None;
        for restart in 0..config.restarts_per_k {
            let Some(fit) = fit_once(data, k, restart, critical, config)? else {
                continue;
            };
            if fit.accepted && accepted.iter().all(|a| distance(a, &fit) >= config.dedup_tol) {
                accepted.push(fit.clone());
                if accepted.len() == config.n_solutions {
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
                best = Some(fit);
            }
        }
        if !accepted.is_empty() {
            accepted.sort_by(|a, b| a.objective.total_cmp(&b.objective));
            rejected.sort_by(|a, b| a.objective.total_cmp(&b.objective));
            accepted.extend(rejected);
            return Ok(accepted);
        }
        rejected.extend(best);
    }
    if rejected.is_empty() {
        return Err(Error::Numerical("no restart produced a finite fit"));
    }
    rejected.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    Ok(rejected)
}
