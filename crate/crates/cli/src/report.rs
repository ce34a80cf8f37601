//! Schema-versioned JSON reports. Nothing time-dependent goes in here, so
//! a fixed config and seed give byte-identical output.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use ciconia::stats::CheckResult;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    /// Command-specific results.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Report {
    /// The echoed config carries the effective seed and sample count.
    pub fn new(command: impl Into<String>, config: &RunConfig) -> Self {
        let mut config = config.clone();
        config.seed = Some(config.seed());
        config.samples = Some(config.samples());
        Report {
            schema: SCHEMA,
            command: command.into(),
            config,
            checks: Vec::new(),
            pass: true,
            details: Value::Null,
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    /// A check on a single number rather than a sample set.
    pub fn push_value(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(CheckResult {
            name: name.to_string(),
            max_residual: value,
            tolerance,
            pass: value < tolerance,
            samples: 1,
            skipped: 0,
            worst_point: None,
        });
    }

    pub fn push_flag(&mut self, name: &str, ok: bool) {
        self.push(CheckResult {
            name: name.to_string(),
            max_residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass: ok,
            samples: 1,
            skipped: 0,
            worst_point: None,
        });
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        if self.details.is_null() {
            self.details = Value::Object(Default::default());
        }
        let v = serde_json::to_value(value)?;
        self.details
            .as_object_mut()
            .expect("details is an object")
            .insert(key.to_string(), v);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = self.to_json()?;
        match path {
            Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

/// Formats a float for CSV: shortest round-trip form, `NA` for non-finite.
pub fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        "NA".to_string()
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for r in rows {
        text.push_str(&r.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
