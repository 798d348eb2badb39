//! Experiment artifacts: judged metrics, the structured-text summary, and
//! the CSV writer all runs share.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Acceptance rule for one metric value.
#[derive(Clone, Copy, Debug)]
pub enum Tolerance {
    /// `value <= bound`.
    AtMost(f64),
    /// `value >= bound`.
    AtLeast(f64),
    /// `|value - target| <= band`.
    Within { target: f64, band: f64 },
}

impl Tolerance {
    pub fn admits(&self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match *self {
            Tolerance::AtMost(bound) => value <= bound,
            Tolerance::AtLeast(bound) => value >= bound,
            Tolerance::Within { target, band } => (value - target).abs() <= band,
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Tolerance::AtMost(bound) => write!(f, "<= {bound:e}"),
            Tolerance::AtLeast(bound) => write!(f, ">= {bound:e}"),
            Tolerance::Within { target, band } => write!(f, "{target} +- {band}"),
        }
    }
}

/// One measured quantity, judged against its tolerance and traceable to the
/// raw data file it was computed from.
#[derive(Clone, Debug)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
    pub data_path: PathBuf,
}

impl Metric {
    pub fn new(
        name: impl Into<String>,
        value: f64,
        tolerance: Tolerance,
        data_path: impl Into<PathBuf>,
    ) -> Self {
        Metric {
            name: name.into(),
            value,
            tolerance,
            passed: tolerance.admits(value),
            data_path: data_path.into(),
        }
    }
}

/// Outcome of one scripted experiment.
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub metrics: Vec<Metric>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport {
            name: name.into(),
            parameters: Vec::new(),
            metrics: Vec::new(),
        }
    }

    pub fn parameter(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.parameters.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, metric: Metric) {
        self.metrics.push(metric);
    }

    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.passed)
    }

    /// Output files referenced by at least one metric, deduplicated in
    /// first-use order.
    pub fn data_paths(&self) -> Vec<&Path> {
        let mut seen: Vec<&Path> = Vec::new();
        for m in &self.metrics {
            if !seen.contains(&m.data_path.as_path()) {
                seen.push(&m.data_path);
            }
        }
        seen
    }

    /// Line-oriented summary: one header, the parameters, then one line per
    /// metric with value, tolerance, verdict, and data file.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "experiment {}: {}\n",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" }
        ));
        for (k, v) in &self.parameters {
            out.push_str(&format!("  param {k} = {v}\n"));
        }
        for m in &self.metrics {
            out.push_str(&format!(
                "  metric {} = {:.6e} ({}) {} [{}]\n",
                m.name,
                m.value,
                m.tolerance,
                if m.passed { "PASS" } else { "FAIL" },
                m.data_path.display(),
            ));
        }
        out
    }
}

/// Writes a rectangular table as CSV: comma delimiter, `.` decimal point,
/// one header row, every number at 17 significant digits so a reread loses
/// nothing. Output depends only on the arguments, byte for byte.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch {
                expected: header.len(),
                got: row.len(),
            });
        }
    }
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                text.push(',');
            }
            first = false;
            text.push_str(&format!("{v:.16e}"));
        }
        text.push('\n');
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(e.to_string()))?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io(e.to_string()))
}
