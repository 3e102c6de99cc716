//! Decomposition of peak intervals into Pearson VII kernels.
//!
//! On a peak interval the baseline-subtracted data are modelled as a small
//! linear tilt plus `k` kernels. Starting at `k = 1`, random restarts of a
//! quasi-Newton minimizer search the weighted least-squares objective, and a
//! fit is accepted once its standardized residuals pass the all-subintervals
//! criterion. The first `k` with an accepted fit wins.

pub mod bfgs;
mod objective;
mod pearson;
mod segment;
pub mod transform;

pub use objective::{params_eval, wls_objective, wls_value, SegmentData, MIN_SEGMENT_LEN};
pub use pearson::{pearson_eval, pearson_kernel, peak_stats, PearsonComponent, PeakStats, NEGLIGIBLE_HEIGHT};
pub use segment::{
    acceptance_scale, acceptance_statistic, fit_once, fit_segment, model_eval, tilt_bounds, FitConfig, SegmentFit,
};
pub use transform::{ParamTransform, Params};
