//! CSV and JSON artifacts.
//!
//! Per-run diagnostics files have the fixed columns of
//! [`DIAGNOSTICS_COLUMNS`]; decay summaries use [`SUMMARY_COLUMNS`]. Every
//! experiment writes `verdict.json`.

use std::fs::File;
use std::path::{Path, PathBuf};

use aflow_core::diagnostics::DiagnosticsRecord;
use aflow_core::integrator::{Control, Observer};
use aflow_core::spectral::SpectralVectorField;
use serde::Serialize;

use crate::error::Result;
use crate::fit::DecayFit;

pub const DIAGNOSTICS_COLUMNS: [&str; 11] = [
    "t",
    "filtered_energy",
    "v_l2sq",
    "v_h1sq",
    "v_h2sq",
    "dtv_l2sq",
    "spectrum_sup",
    "split_low",
    "split_high",
    "filter_residual",
    "orth_residual",
];

pub const SUMMARY_COLUMNS: [&str; 8] = ["norm_id", "t_a", "t_b", "slope", "intercept", "r2", "expected", "pass"];

pub fn diagnostics_row(r: &DiagnosticsRecord) -> Vec<String> {
    let norm = |m: usize| r.v_norms.get(m).copied().unwrap_or(f64::NAN);
    [
        r.t,
        r.filtered_energy,
        norm(0),
        norm(1),
        norm(2),
        r.dt_v_norm,
        r.spectrum_sup,
        r.split_low,
        r.split_high,
        r.filter_identity_residual,
        r.orthogonality_residual,
    ]
    .iter()
    .map(|x| x.to_string())
    .collect()
}

/// Observer that streams every sample to a CSV file and keeps the records.
pub struct Recorder {
    writer: Option<csv::Writer<File>>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Recorder {
    pub fn to_file(path: &Path) -> Result<Self> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(DIAGNOSTICS_COLUMNS)?;
        Ok(Self { writer: Some(w), records: Vec::new() })
    }

    pub fn in_memory() -> Self {
        Self { writer: None, records: Vec::new() }
    }

    pub fn finish(mut self) -> Result<Vec<DiagnosticsRecord>> {
        if let Some(w) = self.writer.as_mut() {
            w.flush()?;
        }
        Ok(self.records)
    }

    fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.write_record(diagnostics_row(rec))?;
        }
        self.records.push(rec.clone());
        Ok(())
    }
}

impl Observer for Recorder {
    fn on_sample(&mut self, rec: &DiagnosticsRecord, _state: &SpectralVectorField) -> aflow_core::Result<Control> {
        self.write(rec)
            .map_err(|e| aflow_core::FlowError::Io(std::io::Error::other(e.to_string())))?;
        Ok(Control::Continue)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub fit: DecayFit,
    pub expected: f64,
    pub pass: bool,
}

pub fn write_fit_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.fit.norm_id.clone(),
            r.fit.window.0.to_string(),
            r.fit.window.1.to_string(),
            r.fit.slope.to_string(),
            r.fit.intercept.to_string(),
            r.fit.r_squared.to_string(),
            r.expected.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, requirement: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, requirement: requirement.into(), pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub experiment: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(experiment: &str, checks: Vec<Check>, notes: Vec<String>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { experiment: experiment.into(), pass, checks, notes }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("verdict.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: {:.6e} (need {})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.requirement
                )
            })
            .collect()
    }
}
