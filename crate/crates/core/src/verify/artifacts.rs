//! CSV, JSON and Markdown artifacts of a set of checks.
//!
//! The CSV matrix and JSON records contain no timing, so identical runs give
//! byte-identical files. Wall-clock times go to `timing.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::{CheckReport, LhsMethod};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "theorem,model,function,r0,delta,lhs,rhs,margin,pass";

pub const MATRIX_FILE: &str = "matrix.csv";
pub const CHECKS_FILE: &str = "checks.json";
pub const SUMMARY_FILE: &str = "summary.md";
pub const TIMING_FILE: &str = "timing.json";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_matrix(reports: &[CheckReport]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.theorem,
            r.model,
            r.function,
            opt(r.r0),
            opt(r.delta),
            r.lhs,
            r.rhs,
            r.margin,
            r.pass
        );
    }
    s
}

#[derive(Serialize)]
struct Record<'a> {
    theorem: &'a str,
    model: &'a str,
    function: &'a str,
    r0: Option<f64>,
    delta: Option<f64>,
    config: &'a std::collections::BTreeMap<String, f64>,
    method: LhsMethod,
    lhs: f64,
    lhs_se: Option<f64>,
    rhs: f64,
    margin: f64,
    slack: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Records<'a> {
    schema_version: u32,
    passed: usize,
    failed: usize,
    records: Vec<Record<'a>>,
}

/// JSON document with every check except its wall-clock time.
pub fn json_records(reports: &[CheckReport]) -> Result<String> {
    let passed = reports.iter().filter(|r| r.pass).count();
    let doc = Records {
        schema_version: SCHEMA_VERSION,
        passed,
        failed: reports.len() - passed,
        records: reports
            .iter()
            .map(|r| Record {
                theorem: &r.theorem,
                model: &r.model,
                function: &r.function,
                r0: r.r0,
                delta: r.delta,
                config: &r.config,
                method: r.method,
                lhs: r.lhs,
                lhs_se: r.lhs_se,
                rhs: r.rhs,
                margin: r.margin,
                slack: r.slack,
                pass: r.pass,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))
}

/// Per-theorem pass counts, then every failing row.
pub fn markdown_summary(reports: &[CheckReport]) -> String {
    let mut theorems: Vec<&str> = Vec::new();
    for r in reports {
        if !theorems.contains(&r.theorem.as_str()) {
            theorems.push(&r.theorem);
        }
    }
    let mut s = String::from("# Check summary\n\n| theorem | checks | passed | min margin |\n|---|---|---|---|\n");
    for t in &theorems {
        let rows: Vec<&CheckReport> = reports.iter().filter(|r| r.theorem == *t).collect();
        let passed = rows.iter().filter(|r| r.pass).count();
        let min = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "| {t} | {} | {passed} | {min:.6e} |", rows.len());
    }
    let failed: Vec<&CheckReport> = reports.iter().filter(|r| !r.pass).collect();
    let _ = writeln!(s, "\nTotal: {} checks, {} failed.", reports.len(), failed.len());
    if !failed.is_empty() {
        s.push_str("\n## Failures\n\n| theorem | model | function | r0 | delta | lhs | rhs | slack |\n|---|---|---|---|---|---|---|---|\n");
        for r in failed {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                r.theorem,
                r.model,
                r.function,
                opt(r.r0),
                opt(r.delta),
                r.lhs,
                r.rhs,
                r.slack
            );
        }
    }
    s
}

#[derive(Serialize)]
struct Timing<'a> {
    theorem: &'a str,
    model: &'a str,
    function: &'a str,
    r0: Option<f64>,
    delta: Option<f64>,
    elapsed_s: f64,
}

pub fn timing_json(reports: &[CheckReport]) -> Result<String> {
    let rows: Vec<Timing> = reports
        .iter()
        .map(|r| Timing {
            theorem: &r.theorem,
            model: &r.model,
            function: &r.function,
            r0: r.r0,
            delta: r.delta,
            elapsed_s: r.elapsed_s,
        })
        .collect();
    serde_json::to_string_pretty(&rows).map_err(|e| Error::Io(e.to_string()))
}

/// Paths of the files written by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct ArtifactPaths {
    pub matrix: PathBuf,
    pub checks: PathBuf,
    pub summary: PathBuf,
    pub timing: PathBuf,
}

pub fn write_artifacts(dir: &Path, reports: &[CheckReport]) -> Result<ArtifactPaths> {
    fs::create_dir_all(dir)?;
    let paths = ArtifactPaths {
        matrix: dir.join(MATRIX_FILE),
        checks: dir.join(CHECKS_FILE),
        summary: dir.join(SUMMARY_FILE),
        timing: dir.join(TIMING_FILE),
    };
    fs::write(&paths.matrix, csv_matrix(reports))?;
    fs::write(&paths.checks, json_records(reports)?)?;
    fs::write(&paths.summary, markdown_summary(reports))?;
    fs::write(&paths.timing, timing_json(reports)?)?;
    Ok(paths)
}
