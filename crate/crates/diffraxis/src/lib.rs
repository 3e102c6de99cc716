//! Peak analysis of x-ray diffractograms: file input, the five-stage
//! pipeline on top of `diffraxis-core`, and JSON, CSV and plot-table output.
//!
//! ```no_run
//! use diffraxis::{ingest, run_pipeline, InputFormat, PipelineConfig};
//!
//! let d = ingest(std::path::Path::new("scan.xy"), InputFormat::Auto)?;
//! let result = run_pipeline(&d, &PipelineConfig::default())?;
//! for s in &result.segments {
//!     println!("{:?}", s.best().map(|f| f.k));
//! }
//! # Ok::<(), diffraxis::AppError>(())
//! ```

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod critical;
mod error;
pub mod export;
pub mod fixtures;
pub mod ingest;
pub mod pipeline;

pub use config::{HklAssignment, PipelineConfig};
pub use error::{AppError, Result};
pub use ingest::{ingest, parse_str, InputFormat};
pub use pipeline::{run_pipeline, run_pipeline_timed, AnalysisResult, SegmentResult, Stage, StageTimings};
