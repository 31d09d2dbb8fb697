//! Experiment reports and their JSON / CSV encodings.
//!
//! JSON layout (schema version 1):
//!
//! ```text
//! { "schema": 1, "tool": "takagi 0.1.0", "experiment": "...", "seed": 7,
//!   "parameters": { "name": "value", ... },
//!   "statistics": [ { "name", "value", "lower", "upper", "pass" }, ... ],
//!   "passed": true }
//! ```
//!
//! CSV layout: a `#`-prefixed header block (`# key=value` for schema,
//! tool, experiment, seed, passed, and `# param.NAME=VALUE` per parameter),
//! then a header row `statistic,value,lower,upper,pass` and one row per
//! statistic. Empty cells mean "absent". LF line endings throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub fn tool_id() -> String {
    format!("takagi {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// `None` for purely informational statistics.
    pub pass: Option<bool>,
}

impl Statistic {
    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower: None,
            upper: None,
            pass: None,
        }
    }

    /// Checked statistic: passes iff `lower <= value <= upper` for the
    /// bounds that are present.
    pub fn checked(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Self {
            name: name.into(),
            value,
            lower,
            upper,
            pass: Some(pass),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::checked(name, value, None, Some(upper))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self::checked(name, value, Some(lower), None)
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub tool: String,
    pub experiment: String,
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, String>,
    pub statistics: Vec<Statistic>,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool: tool_id(),
            experiment: experiment.into(),
            seed,
            parameters: BTreeMap::new(),
            statistics: Vec::new(),
            passed: true,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, stat: Statistic) {
        if stat.failed() {
            self.passed = false;
        }
        self.statistics.push(stat);
    }

    pub fn get(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|s| s.value)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Statistic> {
        self.statistics.iter().filter(|s| s.failed())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema={}", self.schema);
        let _ = writeln!(out, "# tool={}", self.tool);
        let _ = writeln!(out, "# experiment={}", self.experiment);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed={seed}");
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "# param.{k}={v}");
        }
        let _ = writeln!(out, "# passed={}", self.passed);
        out.push_str("statistic,value,lower,upper,pass\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.statistics {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.name,
                s.value,
                opt(s.lower),
                opt(s.upper),
                s.pass.map(|p| p.to_string()).unwrap_or_default()
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Report(format!("csv: {what}"));
        let mut report = ExperimentReport::new("", None);
        report.tool.clear();
        let mut lines = text.lines();
        let mut saw_header = false;
        for line in lines.by_ref() {
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, value) = meta.split_once('=').ok_or_else(|| bad(line))?;
                match key {
                    "schema" => report.schema = value.parse().map_err(|_| bad(line))?,
                    "tool" => report.tool = value.to_string(),
                    "experiment" => report.experiment = value.to_string(),
                    "seed" => report.seed = Some(value.parse().map_err(|_| bad(line))?),
                    "passed" => report.passed = value.parse().map_err(|_| bad(line))?,
                    other => {
                        let name = other.strip_prefix("param.").ok_or_else(|| bad(line))?;
                        report.parameters.insert(name.to_string(), value.to_string());
                    }
                }
            } else if line == "statistic,value,lower,upper,pass" {
                saw_header = true;
                break;
            } else {
                return Err(bad(line));
            }
        }
        if !saw_header {
            return Err(bad("missing header row"));
        }
        let num = |cell: &str| -> Result<Option<f64>> {
            if cell.is_empty() {
                Ok(None)
            } else {
                cell.parse().map(Some).map_err(|_| bad(cell))
            }
        };
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 5 {
                return Err(bad(line));
            }
            report.statistics.push(Statistic {
                name: cells[0].to_string(),
                value: num(cells[1])?.ok_or_else(|| bad(line))?,
                lower: num(cells[2])?,
                upper: num(cells[3])?,
                pass: if cells[4].is_empty() {
                    None
                } else {
                    Some(cells[4].parse().map_err(|_| bad(line))?)
                },
            });
        }
        Ok(report)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => self.to_csv(),
        }
    }
}
