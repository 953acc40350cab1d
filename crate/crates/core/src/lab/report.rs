use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::LabConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    PassWithinBudget,
    Fail,
}

impl CheckStatus {
    pub fn is_ok(self) -> bool {
        self != CheckStatus::Fail
    }
}

/// One pass/fail judgement: `value` against `threshold`, with `budget` the
/// resolution allowance on top of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub value: f64,
    pub threshold: f64,
    pub budget: f64,
}

impl Check {
    /// value ≤ threshold passes; value ≤ threshold + budget passes within
    /// budget. NaN fails.
    pub fn upper(name: impl Into<String>, value: f64, threshold: f64, budget: f64) -> Self {
        let status = if value <= threshold {
            CheckStatus::Pass
        } else if value <= threshold + budget {
            CheckStatus::PassWithinBudget
        } else {
            CheckStatus::Fail
        };
        Self {
            name: name.into(),
            status,
            value,
            threshold,
            budget,
        }
    }

    /// A yes/no property; value is 1 when it holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            budget: 0.0,
        }
    }
}

/// A numeric table written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Convergence table with columns parameter, error, budget.
    pub fn convergence(name: impl Into<String>, parameters: &[f64], errors: &[f64], budgets: &[f64]) -> Self {
        let mut t = Self::new(name, &["parameter", "error", "budget"]);
        for ((p, e), b) in parameters.iter().zip(errors).zip(budgets) {
            t.push(vec![*p, *e, *b]);
        }
        t
    }
}

/// Wall-clock timing, the only part of a report that varies between runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: LabConfig,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Named budgets that apply to the whole experiment.
    pub budgets: Vec<(String, f64)>,
    /// Non-fatal observations such as unconverged norm estimates.
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, config: LabConfig) -> Self {
        Self {
            experiment: experiment.into(),
            config,
            checks: Vec::new(),
            tables: Vec::new(),
            budgets: Vec::new(),
            notes: Vec::new(),
            timing: None,
        }
    }

    /// Fail if any check failed, else pass-within-budget if any did, else
    /// pass. An empty report passes.
    pub fn status(&self) -> CheckStatus {
        self.checks.iter().map(|c| c.status).max().unwrap_or(CheckStatus::Pass)
    }

    pub fn passed(&self) -> bool {
        self.status().is_ok()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// The full report as pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without the timing field; identical configs give identical
    /// strings.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = None;
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<dir>/report.json` and one CSV per table; returns the paths
/// written.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json()).map_err(io_err(&json_path))?;
    let mut written = vec![json_path];
    for table in &report.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let csv_err = |source| Error::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&table.columns).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
