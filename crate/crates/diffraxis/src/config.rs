use std::str::FromStr;

use diffraxis_core::crystallography::{LatticeConfig, MillerIndices};
use diffraxis_core::peak_fit::{bfgs::BfgsConfig, FitConfig};
use serde::{Deserialize, Serialize};

use crate::error::AppError;

/// Every knob of the analysis. Together with the input it determines the
/// output bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Threshold constant of the multiscale criterion, `√(τ ln n)`.
    pub tau: f64,
    /// Coverage level of the critical values `C_L`.
    pub alpha: f64,
    /// Segment the ground noise instead of using one global level.
    pub hetero: bool,
    pub q_squeeze: f64,
    pub q_weights: f64,
    pub spline_max_iterations: usize,
    pub max_kernels: usize,
    pub restarts: usize,
    pub solutions: usize,
    pub seed: u64,
    /// Seed and replicate count of the `C_L` simulation.
    pub cl_seed: u64,
    pub cl_replicates: usize,
    pub lattice: LatticeConfig,
    pub hkl: Vec<HklAssignment>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            alpha: 0.95,
            hetero: false,
            q_squeeze: 0.9,
            q_weights: 2.0,
            spline_max_iterations: 200,
            max_kernels: 4,
            restarts: 200,
            solutions: 3,
            seed: 0,
            cl_seed: 0,
            cl_replicates: 1000,
            lattice: LatticeConfig::default(),
            hkl: Vec::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AppError> {
        let bad = |m: &str| Err(AppError::Input(m.to_string()));
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.q_squeeze > 0.0 && self.q_squeeze < 1.0) {
            return bad("q-squeeze must lie in (0, 1)");
        }
        if !(self.q_weights > 1.0) {
            return bad("q-weights must exceed 1");
        }
        if self.max_kernels == 0 || self.restarts == 0 || self.solutions == 0 {
            return bad("max-kernels, restarts and solutions must be positive");
        }
        if self.cl_replicates == 0 || self.spline_max_iterations == 0 {
            return bad("cl-replicates and spline iterations must be positive");
        }
        LatticeConfig::new(self.lattice.wavelength, self.lattice.a0).map_err(|e| AppError::Input(e.to_string()))?;
        Ok(())
    }

    /// Fit settings for segment `segment`, each with its own seed.
    pub fn fit_config(&self, segment: usize) -> FitConfig {
        FitConfig {
            max_k: self.max_kernels,
            restarts_per_k: self.restarts,
            n_solutions: self.solutions,
            seed: segment_seed(self.seed, segment),
            bfgs: BfgsConfig::default(),
            ..FitConfig::default()
        }
    }
}

/// SplitMix64 finalizer over the run seed and segment number.
fn segment_seed(seed: u64, segment: usize) -> u64 {
    let mut z = seed.wrapping_add((segment as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reflection indices assigned by the user to the fitted component nearest
/// `near` (degrees 2θ). Written `h,k,l@angle`, e.g. `2,2,2@30.4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HklAssignment {
    pub indices: MillerIndices,
    pub near: f64,
}

impl FromStr for HklAssignment {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        let err = || AppError::Input(format!("expected h,k,l@angle, found `{s}`"));
        let (idx, near) = s.split_once('@').ok_or_else(err)?;
        let near: f64 = near.trim().parse().map_err(|_| err())?;
        let hkl: Vec<i32> = idx
            .split(',')
            .map(|v| v.trim().parse::<i32>())
            .collect::<Result<_, _>>()
            .map_err(|_| err())?;
        if hkl.len() != 3 || !near.is_finite() {
            return Err(err());
        }
        let indices = MillerIndices::new(hkl[0], hkl[1], hkl[2]).map_err(|e| AppError::Input(e.to_string()))?;
        Ok(Self { indices, near })
    }
}
