use crate::config::{Mode, Settings};
use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub struct Outcome {
    pub passed: bool,
    pub measured: Value,
    pub expected: Value,
    pub tolerance: Option<f64>,
    pub note: Option<String>,
}

impl Outcome {
    pub fn exact<T: Serialize, U: Serialize>(measured: T, expected: U) -> Outcome {
        let (m, e) = (json!(measured), json!(expected));
        Outcome {
            passed: m == e,
            measured: m,
            expected: e,
            tolerance: None,
            note: None,
        }
    }

    pub fn within(measured: f64, expected: f64, tol: f64) -> Outcome {
        Outcome {
            passed: (measured - expected).abs() <= tol,
            measured: json!(measured),
            expected: json!(expected),
            tolerance: Some(tol),
            note: None,
        }
    }

    /// measured < bound.
    pub fn below(measured: f64, bound: f64) -> Outcome {
        Outcome {
            passed: measured < bound,
            measured: json!(measured),
            expected: json!(0.0),
            tolerance: Some(bound),
            note: None,
        }
    }

    pub fn info<T: Serialize>(measured: T) -> Outcome {
        Outcome {
            passed: true,
            measured: json!(measured),
            expected: Value::Null,
            tolerance: None,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Outcome {
        self.note = Some(note.into());
        self
    }
}

type Runner = Box<dyn Fn() -> Result<Outcome> + Send + Sync>;

pub struct Check {
    pub id: String,
    pub source: &'static str,
    run: Runner,
}

impl Check {
    pub fn new(id: impl Into<String>, source: &'static str, run: impl Fn() -> Result<Outcome> + Send + Sync + 'static) -> Check {
        Check {
            id: id.into(),
            source,
            run: Box::new(run),
        }
    }
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: String,
    pub source: String,
    pub status: &'static str,
    pub measured: Value,
    pub expected: Value,
    pub tolerance: Option<f64>,
    pub diagnostics: Option<String>,
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

/// Runs checks in parallel; errors and panics become failed checks. Output is sorted by id.
pub fn run_checks(checks: Vec<Check>) -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = checks
        .into_par_iter()
        .map(|c| {
            let failed = |diag: String| CheckResult {
                id: c.id.clone(),
                source: c.source.to_string(),
                status: "fail",
                measured: Value::Null,
                expected: Value::Null,
                tolerance: None,
                diagnostics: Some(diag),
            };
            match catch_unwind(AssertUnwindSafe(|| (c.run)())) {
                Ok(Ok(o)) => CheckResult {
                    id: c.id.clone(),
                    source: c.source.to_string(),
                    status: if o.passed { "pass" } else { "fail" },
                    measured: o.measured,
                    expected: o.expected,
                    tolerance: o.tolerance,
                    diagnostics: o.note,
                },
                Ok(Err(e)) => failed(format!("error: {e:#}")),
                Err(p) => failed(format!("panic: {}", panic_text(p))),
            }
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Serialize, Debug)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub mode: Mode,
    pub seed: u64,
    pub parameters: BTreeMap<String, String>,
    pub timestamp: u64,
}

#[derive(Serialize, Debug)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub header: Header,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: String, settings: &Settings, checks: Vec<CheckResult>) -> Report {
        let passed = checks.iter().filter(|c| c.status == "pass").count();
        Report {
            header: Header {
                tool: "g2glue",
                version: env!("CARGO_PKG_VERSION"),
                command,
                mode: settings.mode,
                seed: settings.seed,
                parameters: settings.describe(),
                timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            },
            summary: Summary {
                total: checks.len(),
                passed,
                failed: checks.len() - passed,
            },
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// A CSV table written next to the report.
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn write_outputs(dir: &Path, report: &Report, tables: &[Table]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(report)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    for t in tables {
        let path = dir.join(format!("{}.csv", t.name));
        std::fs::write(&path, t.render()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
