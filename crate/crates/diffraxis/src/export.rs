use std::io::Write;
use std::path::Path;

use diffraxis_core::peak_fit::{model_eval, pearson_eval};
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::pipeline::AnalysisResult;

/// Pretty-printed JSON. Floats use the shortest representation that parses
/// back to the same value.
pub fn to_json(r: &AnalysisResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<AnalysisResult> {
    Ok(serde_json::from_str(text)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

pub fn write_json(r: &AnalysisResult, path: &Path) -> Result<()> {
    write_file(path, to_json(r)?.as_bytes())
}

/// One CSV row per fitted component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRow {
    pub segment_id: usize,
    pub solution_rank: usize,
    pub accepted: bool,
    pub two_theta: f64,
    pub height: f64,
    pub intensity: f64,
    pub fwhm: f64,
    pub m: f64,
    pub a: f64,
    pub beta0: f64,
    pub beta1: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

pub fn component_rows(r: &AnalysisResult) -> Vec<ComponentRow> {
    let mut rows = Vec::new();
    for s in &r.segments {
        for (rank, fit) in s.fits.iter().enumerate() {
            for (c, st) in fit.components.iter().zip(&fit.stats) {
                rows.push(ComponentRow {
                    segment_id: s.id,
                    solution_rank: rank,
                    accepted: fit.accepted,
                    two_theta: c.mu,
                    height: st.height,
                    intensity: st.intensity,
                    fwhm: st.fwhm,
                    m: c.m,
                    a: c.a,
                    beta0: fit.beta0,
                    beta1: fit.beta1,
                    r: fit.objective,
                });
            }
        }
    }
    rows
}

const CSV_HEADER: [&str; 12] = [
    "segment_id",
    "solution_rank",
    "accepted",
    "two_theta",
    "height",
    "intensity",
    "fwhm",
    "m",
    "a",
    "beta0",
    "beta1",
    "R",
];

pub fn write_csv_to<W: Write>(r: &AnalysisResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Written by hand so that an empty result still carries the header.
    w.write_record(CSV_HEADER)?;
    for row in component_rows(r) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(r: &AnalysisResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    write_csv_to(r, file).map_err(|source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Column names of the plot table: six base series, one fitted curve per
/// segment and one curve per component of that segment's best solution.
pub fn plot_header(r: &AnalysisResult) -> Vec<String> {
    let mut h: Vec<String> = ["angle", "counts", "denoised", "spline", "spline_derivative", "baseline"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for s in &r.segments {
        h.push(format!("fit_{}", s.id));
    }
    for s in &r.segments {
        if let Some(best) = s.best() {
            for j in 0..best.components.len() {
                h.push(format!("component_{}_{}", s.id, j));
            }
        }
    }
    h
}

/// Rows of the plot table. Segment and component columns are empty outside
/// their segment. The fitted curve includes the baseline and the local
/// tilt; component curves are the bare kernels.
pub fn plot_rows(r: &AnalysisResult) -> Vec<Vec<String>> {
    let denoised = r.denoised.evaluate();
    let cell = |v: f64| format!("{v}");
    (0..r.angles.len())
        .map(|i| {
            let t = r.angles[i];
            let mut row = vec![
                cell(t),
                cell(r.counts[i]),
                cell(denoised[i]),
                cell(r.spline[i]),
                cell(r.spline_derivative[i]),
                cell(r.baseline[i]),
            ];
            let inside = |s: &crate::pipeline::SegmentResult| s.start <= i && i <= s.end;
            for s in &r.segments {
                row.push(match s.best() {
                    Some(f) if inside(s) => cell(model_eval(t, f) + r.baseline[i]),
                    _ => String::new(),
                });
            }
            for s in &r.segments {
                if let Some(best) = s.best() {
                    for c in &best.components {
                        row.push(if inside(s) { cell(pearson_eval(t, c)) } else { String::new() });
                    }
                }
            }
            row
        })
        .collect()
}

pub fn write_plot_data_to<W: Write>(r: &AnalysisResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_writer(out);
    w.write_record(plot_header(r))?;
    for row in plot_rows(r) {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plot_data(r: &AnalysisResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    write_plot_data_to(r, file).map_err(|source| AppError::Csv {
        path: path.to_path_buf(),
        source,
    })
}
