//! Rectangular experiment tables with provenance and pass/fail checks,
//! persisted as CSV plus a TOML sidecar.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Float(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    /// Floats print as the shortest decimal that round-trips; exponent
    /// notation outside [1e-5, 1e16).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Float(x) => {
                let a = x.abs();
                if *x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
                    write!(f, "{x}")
                } else {
                    write!(f, "{x:e}")
                }
            }
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tolerance: f64,
    pub truncations: Vec<u64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub scenario: String,
    parameters: Vec<String>,
    measurements: Vec<String>,
    rows: Vec<Vec<Cell>>,
    pub provenance: Provenance,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(scenario: &str, parameters: &[&str], measurements: &[&str], provenance: Provenance) -> Self {
        ExperimentReport {
            scenario: scenario.to_string(),
            parameters: parameters.iter().map(|s| s.to_string()).collect(),
            measurements: measurements.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            provenance,
            checks: Vec::new(),
        }
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn header(&self) -> Vec<&str> {
        self.parameters.iter().chain(&self.measurements).map(String::as_str).collect()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_row(&mut self, row: Vec<Cell>) -> Result<()> {
        let expected = self.parameters.len() + self.measurements.len();
        if row.len() != expected {
            return Err(Error::RaggedRow { expected, got: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.header().iter().position(|&h| h == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Numeric column; `None` if absent or any cell is non-numeric.
    pub fn float_column(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.into_iter().map(Cell::as_f64).collect()
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Echo of the config that produced the report, with provenance and
    /// check outcomes.
    pub fn sidecar_toml(&self, config: &impl Serialize, timestamp: &str) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            scenario: &'a str,
            timestamp: &'a str,
            passed: bool,
            provenance: &'a Provenance,
            config: toml::Value,
            checks: &'a [Check],
        }
        let sidecar = Sidecar {
            scenario: &self.scenario,
            timestamp,
            passed: self.all_passed(),
            provenance: &self.provenance,
            config: toml::Value::try_from(config)?,
            checks: &self.checks,
        };
        Ok(toml::to_string(&sidecar)?)
    }

    /// Writes `<scenario>-<timestamp>.csv` and the `.toml` sidecar.
    pub fn write_files(&self, dir: &Path, timestamp: &str, config: &impl Serialize) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.scenario, timestamp);
        let csv_path = dir.join(format!("{stem}.csv"));
        let toml_path = dir.join(format!("{stem}.toml"));
        self.write_csv(fs::File::create(&csv_path)?)?;
        fs::write(&toml_path, self.sidecar_toml(config, timestamp)?)?;
        Ok((csv_path, toml_path))
    }
}
