//! Convergence reports and their CSV/JSON renderings.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perforation::HolesReport;

use super::config::Mode;

pub const CSV_HEADER: &str = "h,holes,min_radius,max_radius,spacing,l2_err,rel_l2_err,h1_err,energy,corrector_l2,runtime_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub mode: Mode,
    pub operator: String,
    /// Which part of `μ` the reference relaxed problem used.
    pub measure: String,
    pub spacing: f64,
    /// `‖u_ref‖_{L²}`; absent when no reference was solved.
    pub l2_norm: Option<f64>,
}

/// One lattice level. Missing metrics are `None` (written as `NaN` in CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: u32,
    /// Holes of positive radius.
    pub holes: usize,
    pub min_radius: f64,
    pub max_radius: f64,
    pub spacing: f64,
    pub l2_err: Option<f64>,
    pub rel_l2_err: Option<f64>,
    pub h1_err: Option<f64>,
    pub energy: Option<f64>,
    pub corrector_l2: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ConvergenceRow {
    pub(crate) fn empty(h: u32, holes: &HolesReport) -> Self {
        ConvergenceRow {
            h,
            holes: holes.active,
            min_radius: holes.min_radius,
            max_radius: holes.max_radius,
            spacing: holes.spacing,
            l2_err: None,
            rel_l2_err: None,
            h1_err: None,
            energy: None,
            corrector_l2: None,
            runtime_ms: 0.0,
            failure: None,
        }
    }

    pub(crate) fn fill(&mut self, m: super::sweep::LevelMetrics) {
        self.l2_err = m.l2;
        self.rel_l2_err = m.rel_l2;
        self.h1_err = m.h1;
        self.energy = m.energy;
        self.corrector_l2 = Some(m.corrector_l2);
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Rows ordered by `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub reference: ReferenceInfo,
    pub rows: Vec<ConvergenceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidInput(format!("unknown report format {other:?} (csv | json)"))),
        }
    }
}

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        "NaN".to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), sci)
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{:.3}",
                r.h,
                r.holes,
                sci(r.min_radius),
                sci(r.max_radius),
                sci(r.spacing),
                opt(r.l2_err),
                opt(r.rel_l2_err),
                opt(r.h1_err),
                opt(r.energy),
                opt(r.corrector_l2),
                r.runtime_ms
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => Ok(self.to_csv()),
            ReportFormat::Json => self.to_json(),
        }
    }
}

pub fn emit_report(report: &ConvergenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = report.render(format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
