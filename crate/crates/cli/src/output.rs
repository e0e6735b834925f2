//! Tables, report files and run metadata.

use frachardy::report::Report;
use serde_json::{json, Value};
use std::fs;
use std::path::Path;

use crate::config::{Format, RunConfig};
use crate::CliError;

/// A named table of numbers and labels, written as `<name>.csv` and/or
/// `<name>.json`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }

    fn csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }

    fn json(&self) -> Value {
        json!({ "columns": self.columns, "rows": self.rows })
    }
}

/// JSON number, or `null` for non-finite values.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// What a command produced.
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
    /// Extra lines printed before the checks.
    pub summary: Vec<String>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Write tables, the report and the metadata file; print the summary.
/// Returns whether every check passed.
pub fn emit(cfg: &RunConfig, mut out: Outcome, started: std::time::SystemTime) -> Result<bool, CliError> {
    let dir = Path::new(&cfg.out);
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut artifacts = Vec::new();
    for t in &out.tables {
        for f in &cfg.formats {
            let (name, bytes) = match f {
                Format::Csv => (format!("{}.csv", t.name), t.csv()?),
                Format::Json => (format!("{}.json", t.name), pretty(&t.json())),
            };
            write(&dir.join(&name), &bytes)?;
            artifacts.push(name);
        }
    }
    out.report.command = cfg.command.clone();
    out.report.config = serde_json::to_value(cfg).map_err(|e| CliError::Io(e.to_string()))?;
    out.report.artifacts = artifacts;
    let report_name = format!("{}.report.json", cfg.command);
    write(&dir.join(&report_name), &pretty(&serde_json::to_value(&out.report).map_err(|e| CliError::Io(e.to_string()))?))?;

    let elapsed = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let unix = started.duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({
        "command": cfg.command,
        "report": report_name,
        "started_unix": unix,
        "elapsed_seconds": elapsed,
        "threads": crate::threads(),
        "parallel": frachardy::par::is_parallel(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write(&dir.join(format!("{}.meta.json", cfg.command)), &pretty(&meta))?;

    for line in &out.summary {
        println!("{line}");
    }
    for c in &out.report.checks {
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}: value {:.6e} target {} tol {:e}", c.name, c.value, c.target, c.tol);
    }
    println!("report: {}", dir.join(&report_name).display());
    Ok(out.report.passed())
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable value");
    b.push(b'\n');
    b
}
