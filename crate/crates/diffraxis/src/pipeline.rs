use std::fmt;
use std::time::{Duration, Instant};

use diffraxis_core::baseline::{baseline_fit, peak_intervals, BaselineConfig, PeakInterval};
use diffraxis_core::crystallography::{lattice_row, LatticeRow};
use diffraxis_core::multiscale::{self, IntervalScheme};
use diffraxis_core::peak_fit::{fit_segment, SegmentData, SegmentFit};
use diffraxis_core::taut_string::{denoise_two_pass, DenoiseConfig, StepFunction};
use diffraxis_core::variance_segmentation::{PiecewiseConstantScale, DEFAULT_TAU};
use diffraxis_core::weighted_spline::{fit_adaptive_weights, AdaptiveSplineConfig};
use diffraxis_core::Diffractogram;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{HklAssignment, PipelineConfig};
use crate::critical::critical_values;
use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Denoise,
    Spline,
    PeakIntervals,
    Baseline,
    CriticalValues,
    PeakFit { segment: usize },
    Lattice,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Denoise => f.write_str("denoising (taut string)"),
            Stage::Spline => f.write_str("smoothing spline"),
            Stage::PeakIntervals => f.write_str("peak intervals"),
            Stage::Baseline => f.write_str("baseline"),
            Stage::CriticalValues => f.write_str("critical values"),
            Stage::PeakFit { segment } => write!(f, "peak fit (segment {segment})"),
            Stage::Lattice => f.write_str("lattice spacings"),
        }
    }
}

fn at(stage: Stage) -> impl FnOnce(diffraxis_core::Error) -> AppError {
    move |source| AppError::Stage { stage, source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub config: PipelineConfig,
    pub n: usize,
    /// Global noise estimate from neighbouring differences.
    pub sigma: f64,
    /// `√(τ ln n)` used for the denoising and spline stages.
    pub threshold: f64,
    pub denoise_iterations: [usize; 2],
    pub spline_iterations: usize,
    pub baseline_iterations: usize,
    /// Ground-noise segmentation, when requested.
    pub segmentation: Option<PiecewiseConstantScale>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub id: usize,
    /// Grid indices of the peak interval, inclusive.
    pub start: usize,
    pub end: usize,
    /// `C_L` for this segment length.
    pub critical: f64,
    /// Accepted fits first (best objective first), then the best rejected
    /// fit of every smaller kernel count.
    pub fits: Vec<SegmentFit>,
}

impl SegmentResult {
    pub fn best(&self) -> Option<&SegmentFit> {
        self.fits.first()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeMatch {
    pub assignment: HklAssignment,
    /// Segment holding the component nearest to the requested angle.
    pub segment: Option<usize>,
    pub accepted: bool,
    pub row: Option<LatticeRow>,
}

/// The decomposition `data = baseline + peaks + noise` with everything
/// needed to plot or re-run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub metadata: Metadata,
    pub angles: Vec<f64>,
    pub counts: Vec<f64>,
    pub denoised: StepFunction,
    pub noise_scale: Vec<f64>,
    pub spline: Vec<f64>,
    pub spline_derivative: Vec<f64>,
    pub baseline: Vec<f64>,
    pub peaks: Vec<PeakInterval>,
    pub segments: Vec<SegmentResult>,
    pub lattice: Vec<LatticeMatch>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub denoise: Duration,
    pub spline: Duration,
    pub intervals: Duration,
    pub baseline: Duration,
    pub peak_fit: Duration,
}

impl StageTimings {
    /// Steps 1 to 4, everything before the peak decomposition.
    pub fn preprocessing(&self) -> Duration {
        self.denoise + self.spline + self.intervals + self.baseline
    }

    pub fn total(&self) -> Duration {
        self.preprocessing() + self.peak_fit
    }
}

pub fn run_pipeline(d: &Diffractogram, config: &PipelineConfig) -> Result<AnalysisResult> {
    run_pipeline_timed(d, config).map(|(r, _)| r)
}

pub fn run_pipeline_timed(d: &Diffractogram, config: &PipelineConfig) -> Result<(AnalysisResult, StageTimings)> {
    config.validate()?;
    let mut timings = StageTimings::default();
    let n = d.len();
    let x = d.angles();
    let y = d.counts();

    let clock = Instant::now();
    let den = denoise_two_pass(
        d,
        &DenoiseConfig {
            tau: config.tau,
            q: config.q_squeeze,
            hetero: config.hetero,
            segmentation_tau: DEFAULT_TAU,
        },
    )
    .map_err(at(Stage::Denoise))?;
    timings.denoise = clock.elapsed();

    let clock = Instant::now();
    let spline_cfg = AdaptiveSplineConfig {
        q_up: config.q_weights,
        max_iterations: config.spline_max_iterations,
        initial_weight: None,
    };
    let spline = fit_adaptive_weights(
        x,
        y,
        &den.scale,
        &IntervalScheme::dyadic(n),
        multiscale::threshold(n, config.tau),
        &spline_cfg,
    )
    .map_err(at(Stage::Spline))?;
    timings.spline = clock.elapsed();

    let clock = Instant::now();
    let peaks = peak_intervals(&den.fit, &spline.spline).map_err(at(Stage::PeakIntervals))?;
    timings.intervals = clock.elapsed();

    let clock = Instant::now();
    let bl = baseline_fit(
        d,
        &peaks,
        &den.scale,
        &BaselineConfig {
            tau: config.tau,
            spline: spline_cfg,
        },
    )
    .map_err(at(Stage::Baseline))?;
    let baseline: Vec<f64> = x.iter().map(|&t| bl.spline.value(t)).collect();
    timings.baseline = clock.elapsed();

    let clock = Instant::now();
    let floor = match &den.segmentation {
        Some(seg) => seg.expand(),
        None => vec![den.sigma; n],
    };
    let segments = fit_segments(d, config, &peaks, &baseline, den.scale.as_slice(), &floor)?;
    timings.peak_fit = clock.elapsed();

    let lattice = config
        .hkl
        .iter()
        .map(|a| match_lattice(a, &segments, config))
        .collect::<Result<Vec<_>>>()?;

    let result = AnalysisResult {
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            n,
            sigma: den.sigma,
            threshold: den.threshold,
            denoise_iterations: den.iterations,
            spline_iterations: spline.iterations,
            baseline_iterations: bl.iterations,
            segmentation: den.segmentation.clone(),
        },
        angles: x.to_vec(),
        counts: y.to_vec(),
        denoised: den.fit,
        noise_scale: den.scale.as_slice().to_vec(),
        spline: spline.spline.values().to_vec(),
        spline_derivative: x.iter().map(|&t| spline.spline.derivative(t)).collect(),
        baseline,
        peaks,
        segments,
        lattice,
    };
    Ok((result, timings))
}

fn fit_segments(
    d: &Diffractogram,
    config: &PipelineConfig,
    peaks: &[PeakInterval],
    baseline: &[f64],
    scale: &[f64],
    floor: &[f64],
) -> Result<Vec<SegmentResult>> {
    let Some(longest) = peaks.iter().map(PeakInterval::len).max() else {
        return Ok(Vec::new());
    };
    let table = critical_values(longest, config.alpha, config.cl_seed, config.cl_replicates)
        .map_err(at(Stage::CriticalValues))?;
    peaks
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            let range = p.start..=p.end;
            let data = SegmentData::new(
                d.angles()[range.clone()].to_vec(),
                d.counts()[range.clone()]
                    .iter()
                    .zip(&baseline[range.clone()])
                    .map(|(y, b)| y - b)
                    .collect(),
                baseline[range.clone()].to_vec(),
                scale[range.clone()].to_vec(),
                floor[range].to_vec(),
            )
            .map_err(at(Stage::PeakFit { segment: id }))?;
            let critical = table[p.len() - 1];
            let fits = fit_segment(&data, critical, &config.fit_config(id)).map_err(at(Stage::PeakFit { segment: id }))?;
            Ok(SegmentResult {
                id,
                start: p.start,
                end: p.end,
                critical,
                fits,
            })
        })
        .collect()
}

fn match_lattice(a: &HklAssignment, segments: &[SegmentResult], config: &PipelineConfig) -> Result<LatticeMatch> {
    let nearest = segments
        .iter()
        .filter_map(|s| s.best().map(|f| (s.id, f)))
        .flat_map(|(id, f)| f.components.iter().map(move |c| (id, f.accepted, c.mu)))
        .min_by(|a_, b_| (a_.2 - a.near).abs().total_cmp(&(b_.2 - a.near).abs()));
    let Some((segment, accepted, mu)) = nearest else {
        return Ok(LatticeMatch {
            assignment: *a,
            segment: None,
            accepted: false,
            row: None,
        });
    };
    let row = lattice_row(mu, a.indices, &config.lattice).map_err(at(Stage::Lattice))?;
    Ok(LatticeMatch {
        assignment: *a,
        segment: Some(segment),
        accepted,
        row: Some(row),
    })
}
