//! Versioned JSON reports and CSV plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use grushin_core::Result;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub relation: Relation,
    pub pass: bool,
    /// Supplementary checks are reported but do not decide the verdict.
    pub primary: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, limit, relation: Relation::AtMost, pass: measured <= limit, primary: true }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, limit, relation: Relation::AtLeast, pass: measured >= limit, primary: true }
    }

    pub fn supplementary(mut self) -> Self {
        self.primary = false;
        self
    }

    pub fn describe(&self) -> String {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        format!("{} = {:.6e} {op} {:.3e}", self.name, self.measured, self.limit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub scenario: String,
    /// The result the scenario verifies.
    pub anchor: String,
    pub d1: usize,
    pub d2: usize,
    pub parameters: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub verdict: Verdict,
}

impl VerificationReport {
    /// Verdict from the primary checks.
    pub fn finish(mut self) -> Self {
        let ok = self.checks.iter().filter(|c| c.primary).all(|c| c.pass);
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Columns of plot data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:e}");
            }
            s.push('\n');
        }
        s
    }
}

/// Writes `<scenario>.report.json` and `<scenario>.data.csv` into `dir`.
pub fn write_outputs(dir: &Path, report: &VerificationReport, data: &DataTable) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join(format!("{}.report.json", report.scenario));
    let csv = dir.join(format!("{}.data.csv", report.scenario));
    std::fs::write(&json, report.to_json()?)?;
    std::fs::write(&csv, data.to_csv())?;
    Ok((json, csv))
}
