//! CSV text and the JSON run summary.

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;

/// Floating values with 17 significant digits.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    columns: usize,
    rows: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            rows: 0,
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// What an experiment produces before anything is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: Csv,
    pub metrics: Value,
    pub checks: Vec<Check>,
    /// Additional files as (name, bytes), written next to the CSV.
    pub extra_files: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub csv: String,
    pub csv_rows: usize,
    pub metrics: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
}
