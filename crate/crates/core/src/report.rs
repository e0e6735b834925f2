//! Serializable verification reports.

use serde::Serialize;

/// One quantitative check. `pass` is decided by the constructor's relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    /// `|value - target| <= tol`.
    pub fn close(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = (value - target).abs() <= tol;
        Check { name: name.into(), value, target, tol, pass }
    }

    /// `value >= target - tol`.
    pub fn at_least(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = value >= target - tol;
        Check { name: name.into(), value, target, tol, pass }
    }

    /// `value <= target + tol`.
    pub fn at_most(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let pass = value <= target + tol;
        Check { name: name.into(), value, target, tol, pass }
    }

    /// A boolean condition recorded as 1 (true) against target 1.
    pub fn holds(name: impl Into<String>, cond: bool) -> Self {
        let v = if cond { 1.0 } else { 0.0 };
        Check { name: name.into(), value: v, target: 1.0, tol: 0.0, pass: cond }
    }
}

/// Record of a run: the resolved configuration, every check, and the files
/// written.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report { command: command.into(), config: serde_json::Value::Null, checks: Vec::new(), artifacts: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
        self.artifacts.extend(other.artifacts);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
