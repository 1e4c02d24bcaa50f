//! Verification records and their CSV / JSON forms.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{KineticError, Result};

/// How `measured` is compared with `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - target| <= tolerance`
    Within,
    /// `measured <= target + tolerance`
    AtMost,
    /// `measured >= target - tolerance`
    AtLeast,
}

/// One measured quantity against its target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub experiment: String,
    pub parameters: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(
        experiment: &str,
        parameters: &str,
        measured: f64,
        target: f64,
        tolerance: f64,
        relation: Relation,
    ) -> Self {
        let pass = measured.is_finite()
            && match relation {
                Relation::Within => (measured - target).abs() <= tolerance,
                Relation::AtMost => measured <= target + tolerance,
                Relation::AtLeast => measured >= target - tolerance,
            };
        Self {
            experiment: experiment.to_string(),
            parameters: parameters.to_string(),
            measured,
            target,
            tolerance,
            relation,
            pass,
        }
    }

    pub fn within(e: &str, p: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(e, p, measured, target, tol, Relation::Within)
    }

    pub fn at_most(e: &str, p: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(e, p, measured, target, tol, Relation::AtMost)
    }

    pub fn at_least(e: &str, p: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self::new(e, p, measured, target, tol, Relation::AtLeast)
    }

    /// A boolean condition recorded as `1 >= 1`.
    pub fn holds(e: &str, p: &str, ok: bool) -> Self {
        Self::at_least(e, p, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }
}

/// A named group of checks plus free-form notes and recorded values.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct VerificationReport {
    pub name: String,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Measured values recorded without a pass/fail gate.
    pub observations: Vec<(String, f64)>,
}

impl VerificationReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn observe(&mut self, key: impl Into<String>, value: f64) {
        self.observations.push((key.into(), value));
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
        self.observations.extend(other.observations);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub const CSV_HEADER: [&str; 6] = ["experiment", "parameters", "measured", "target", "tolerance", "pass"];

/// `results.csv` content for a list of reports.
pub fn to_csv(reports: &[VerificationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| KineticError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in reports {
        for c in &r.checks {
            w.write_record([
                c.experiment.as_str(),
                c.parameters.as_str(),
                &format!("{:e}", c.measured),
                &format!("{:e}", c.target),
                &format!("{:e}", c.tolerance),
                if c.pass { "true" } else { "false" },
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| KineticError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| KineticError::Io(e.to_string()))
}

#[derive(Serialize)]
struct Summary<'a> {
    all_pass: bool,
    total_checks: usize,
    failed_checks: usize,
    reports: &'a [VerificationReport],
}

/// `summary.json` content.
pub fn to_json(reports: &[VerificationReport]) -> Result<String> {
    let total = reports.iter().map(|r| r.checks.len()).sum();
    let failed = reports.iter().map(|r| r.failures().count()).sum();
    let s = Summary {
        all_pass: failed == 0,
        total_checks: total,
        failed_checks: failed,
        reports,
    };
    serde_json::to_string_pretty(&s).map_err(|e| KineticError::Io(e.to_string()))
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, reports: &[VerificationReport]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::File::create(dir.join("results.csv"))?.write_all(to_csv(reports)?.as_bytes())?;
    std::fs::File::create(dir.join("summary.json"))?.write_all(to_json(reports)?.as_bytes())?;
    Ok(())
}
