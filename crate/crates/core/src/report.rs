//! Experiment reports and their serialization.
//!
//! A run writes `report.json` (versioned envelope, byte-stable for a fixed
//! config, seed and tool version), one CSV per table, and `timing.json` with
//! the wall time, which is kept out of the report so reruns compare equal.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One pass/fail outcome, named after the module check that produced it.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        name: impl Into<String>,
        check: &str,
        pass: bool,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            name: name.into(),
            check: check.to_string(),
            pass,
            detail: detail.into(),
        }
    }
}

/// A fitted constant with the samples it was fitted from.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Fitted {
    pub value: f64,
    pub rule: String,
    pub samples: Vec<f64>,
}

/// A plot-ready table. `comment` becomes the `#` header line of the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub comment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, comment: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            comment: comment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.comment);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| csv_cell(c)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest round-trip decimal form of a float; non-finite values spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub fitted: BTreeMap<String, Fitted>,
    pub warnings: Vec<String>,
    /// Set when a module error stopped the run; the report then holds the
    /// results gathered before it.
    pub error: Option<String>,
    pub pass: bool,
    pub body: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config,
            verdicts: Vec::new(),
            fitted: BTreeMap::new(),
            warnings: Vec::new(),
            error: None,
            pass: false,
            body: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn fit(&mut self, name: &str, value: f64, rule: &str, samples: Vec<f64>) {
        self.fitted.insert(
            name.to_string(),
            Fitted {
                value,
                rule: rule.to_string(),
                samples,
            },
        );
    }

    pub fn put<T: Serialize>(&mut self, key: &str, value: &T) {
        let v = serde_json::to_value(value)
            .unwrap_or_else(|e| serde_json::Value::String(format!("unserializable: {e}")));
        self.body.insert(key.to_string(), v);
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    /// Sets `pass`: no error and at least one verdict, all passing.
    pub fn finish(&mut self) {
        self.pass = self.error.is_none()
            && !self.verdicts.is_empty()
            && self.verdicts.iter().all(|v| v.pass);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::config(format!(
                "unknown report format {s:?} (json, csv)"
            ))),
        }
    }
}

/// Writes the report in the requested formats; returns the files written.
pub fn emit_report(
    report: &ExperimentReport,
    formats: &[Format],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        std::fs::write(&p, report.to_json()).map_err(io(&p))?;
        written.push(p);
    }
    if formats.contains(&Format::Csv) {
        for t in &report.tables {
            let p = dir.join(format!("{}.csv", t.name));
            std::fs::write(&p, t.to_csv()).map_err(io(&p))?;
            written.push(p);
        }
    }
    Ok(written)
}

/// Wall time of a run, written beside the report.
pub fn emit_timing(dir: &Path, command: &str, seconds: f64) -> Result<PathBuf> {
    let p = dir.join("timing.json");
    let body = serde_json::json!({ "command": command, "wall_time_seconds": seconds });
    std::fs::write(&p, format!("{body:#}\n")).map_err(|source| Error::Io {
        path: p.display().to_string(),
        source,
    })?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_comment_header_and_quotes() {
        let mut t = Table::new("x", "demo table", &["a", "b"]);
        t.push(vec!["1".into(), "p,q".into()]);
        assert_eq!(t.to_csv(), "# demo table\na,b\n1,\"p,q\"\n");
    }

    #[test]
    fn pass_needs_verdicts() {
        let mut r = ExperimentReport::new("coeffs", serde_json::Value::Null);
        r.finish();
        assert!(!r.pass);
        r.verdict(Verdict::new("a", "f", true, ""));
        r.finish();
        assert!(r.pass);
    }
}
