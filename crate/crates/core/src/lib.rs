//! Residual-based decomposition of photon-count spectra into baseline, peaks
//! and noise.
//!
//! Every fitting stage in this crate is driven by the same idea: among all
//! candidate functions whose standardized residual sums stay below a
//! multiscale threshold, pick the simplest one. "Simple" changes meaning from
//! stage to stage:
//!
//! * [`taut_string`] minimizes the number of local extremes,
//! * [`weighted_spline`] minimizes roughness,
//! * [`peak_fit`] minimizes the number of Pearson VII kernels per peak.
//!
//! [`multiscale`] holds the residual criterion shared by all of them,
//! [`variance_segmentation`] estimates heteroscedastic ground noise,
//! [`baseline`] turns a denoised signal and a spline derivative into peak
//! intervals and a baseline, and [`crystallography`] converts fitted peak
//! positions into lattice spacings.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the end-to-end orchestration live in the `diffraxis` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baseline;
pub mod crystallography;
mod error;
pub mod math;
pub mod multiscale;
pub mod peak_fit;
pub mod rng;
pub mod taut_string;
pub mod variance_segmentation;
pub mod weighted_spline;

pub use error::{Error, Result};
pub use multiscale::{Diffractogram, Interval, IntervalScheme, NoiseProfile, SchemeKind};

/// Lower clamp applied to every estimated noise level.
pub const SIGMA_FLOOR: f64 = 1e-8;
