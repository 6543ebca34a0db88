//! File writers and the savings table.

use std::fs;
use std::path::Path;

use driftwatch::scenarios::savings;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::output(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{} is not a valid report: {e}", path.display())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(path, &String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRow {
    pub family: String,
    pub periodic_models: usize,
    pub drift_aware_models: usize,
    pub savings_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsTable {
    pub rows: Vec<SavingsRow>,
    /// Column sums, with savings recomputed from the sums.
    pub total: SavingsRow,
}

impl SavingsTable {
    pub fn new(counts: &[(String, usize, usize)]) -> Result<Self> {
        let rows = counts
            .iter()
            .map(|(family, p, d)| {
                Ok(SavingsRow {
                    family: family.clone(),
                    periodic_models: *p,
                    drift_aware_models: *d,
                    savings_percent: savings(*p, *d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let p: usize = counts.iter().map(|c| c.1).sum();
        let d: usize = counts.iter().map(|c| c.2).sum();
        let total = SavingsRow {
            family: "Total".into(),
            periodic_models: p,
            drift_aware_models: d,
            savings_percent: if p == 0 { 0.0 } else { savings(p, d)? },
        };
        Ok(SavingsTable { rows, total })
    }

    fn all_rows(&self) -> impl Iterator<Item = &SavingsRow> {
        self.rows.iter().chain(std::iter::once(&self.total))
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.all_rows()
            .map(|r| {
                vec![
                    r.family.clone(),
                    r.periodic_models.to_string(),
                    r.drift_aware_models.to_string(),
                    format!("{:.2}", r.savings_percent),
                ]
            })
            .collect()
    }

    pub fn markdown(&self) -> String {
        let mut out = String::from(
            "| Family | Periodic models | Drift-aware models | Savings |\n|---|---:|---:|---:|\n",
        );
        for r in self.all_rows() {
            out.push_str(&format!(
                "| {} | {} | {} | {:.2}% |\n",
                r.family, r.periodic_models, r.drift_aware_models, r.savings_percent
            ));
        }
        out
    }
}

pub const SAVINGS_HEADER: [&str; 4] = ["family", "periodic_models", "drift_aware_models", "savings_percent"];
