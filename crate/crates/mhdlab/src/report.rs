//! Machine-readable residual reports: `{name, residuals: {label: value},
//! tolerance, verdict}`, serialized as JSON with deterministic key order.

use crate::archive::write_atomic;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub residuals: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub verdict: bool,
}

impl Report {
    pub fn new(name: &str, tolerance: f64, verdict: bool) -> Self {
        Report {
            name: name.to_string(),
            residuals: BTreeMap::new(),
            tolerance,
            verdict,
        }
    }

    pub fn push(&mut self, label: &str, value: f64) {
        self.residuals.insert(label.to_string(), value);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A set of reports written as a single JSON document. The overall verdict
/// is the conjunction of the member verdicts.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportSet {
    pub reports: Vec<Report>,
}

impl ReportSet {
    pub fn push(&mut self, report: Report) {
        self.reports.push(report);
    }

    pub fn verdict(&self) -> bool {
        self.reports.iter().all(|r| r.verdict)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(())
    }

    pub fn print_table(&self) {
        for r in &self.reports {
            let status = if r.verdict { "pass" } else { "FAIL" };
            let worst = r
                .residuals
                .iter()
                .map(|(k, v)| format!("{k}={v:.3e}"))
                .collect::<Vec<_>>()
                .join(" ");
            println!("[{status}] {} (tol {:.1e}) {}", r.name, r.tolerance, worst);
        }
    }
}
