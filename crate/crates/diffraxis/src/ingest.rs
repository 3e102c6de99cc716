//! Two-column text input: angle and counts per line, separated by
//! whitespace, a comma or a semicolon. Lines starting with `#` and blank
//! lines are skipped, as is a single non-numeric header line before the
//! first data row.

use std::path::Path;
use std::str::FromStr;

use diffraxis_core::Diffractogram;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// Accept any of the separators.
    #[default]
    Auto,
    Whitespace,
    Csv,
}

impl FromStr for InputFormat {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(InputFormat::Auto),
            "whitespace" | "txt" | "xy" => Ok(InputFormat::Whitespace),
            "csv" => Ok(InputFormat::Csv),
            other => Err(AppError::Input(format!("unknown input format `{other}`"))),
        }
    }
}

fn fields(line: &str, format: InputFormat) -> Vec<&str> {
    let split: Vec<&str> = match format {
        InputFormat::Whitespace => line.split_whitespace().collect(),
        InputFormat::Csv => line.split([',', ';']).map(str::trim).collect(),
        InputFormat::Auto => line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect(),
    };
    split
}

pub fn parse_str(text: &str, format: InputFormat) -> Result<Diffractogram> {
    let mut angles = Vec::new();
    let mut counts = Vec::new();
    let mut header_allowed = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts = fields(line, format);
        let parsed: Option<Vec<f64>> = parts.iter().map(|f| f.parse::<f64>().ok()).collect();
        let values = match parsed {
            Some(v) => v,
            None if header_allowed => {
                header_allowed = false;
                continue;
            }
            None => {
                return Err(AppError::Parse {
                    line: line_no,
                    message: format!("expected two numbers, found `{line}`"),
                })
            }
        };
        header_allowed = false;
        if values.len() != 2 {
            return Err(AppError::Parse {
                line: line_no,
                message: format!("expected two columns, found {}", values.len()),
            });
        }
        let (t, y) = (values[0], values[1]);
        if !t.is_finite() || !y.is_finite() {
            return Err(AppError::Parse {
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        if y < 0.0 {
            return Err(AppError::Parse {
                line: line_no,
                message: format!("negative count {y}"),
            });
        }
        if let Some(&prev) = angles.last() {
            if t <= prev {
                return Err(AppError::Parse {
                    line: line_no,
                    message: format!("angle {t} does not increase (previous {prev})"),
                });
            }
        }
        angles.push(t);
        counts.push(y);
    }
    Diffractogram::new(angles, counts).map_err(|e| AppError::Input(e.to_string()))
}

pub fn ingest(path: &Path, format: InputFormat) -> Result<Diffractogram> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_str(&text, format)
}
