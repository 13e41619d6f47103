//! Run report written next to every command's artifacts.
//!
//! `report.json` is a pure function of the configuration and the toolkit
//! version. Wall-clock timings vary between runs, so they go to a separate
//! `timings.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::{Config, SCHEMA_VERSION};
use crate::error::Result;
use crate::example::ExampleReport;
use crate::sweep::{SweepRow, SweepSummary};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaEntry {
    pub class: [f64; 2],
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassCountEntry {
    pub class: [f64; 2],
    pub count: usize,
    pub aubry_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub toolkit_version: &'static str,
    pub command: String,
    pub config: Config,
    pub alpha: Vec<AlphaEntry>,
    pub class_counts: Vec<ClassCountEntry>,
    /// Named check residuals (energy, graph property, drift, ...).
    pub residuals: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep_baseline: Vec<SweepRow>,
    /// Stage name to error message.
    pub failures: BTreeMap<String, String>,
    /// Seconds per stage; written to `timings.json`.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str, config: Config) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            toolkit_version: TOOLKIT_VERSION,
            command: command.to_string(),
            config,
            alpha: Vec::new(),
            class_counts: Vec::new(),
            residuals: BTreeMap::new(),
            example: None,
            sweep: None,
            sweep_baseline: Vec::new(),
            failures: BTreeMap::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Record a residual; non-finite values become failures.
    pub fn residual(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.residuals.insert(name.to_string(), value);
        } else {
            self.failures.insert(name.to_string(), format!("non-finite residual {value}"));
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Write `report.json` and `timings.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(
            dir.join("timings.json"),
            serde_json::to_string_pretty(&self.timings)? + "\n",
        )?;
        Ok(())
    }
}
