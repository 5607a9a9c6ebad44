//! Check results and their text and CSV renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// Format with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub values: Vec<(String, f64)>,
    pub tolerance: f64,
    pub pass: bool,
    /// What identity the check tests.
    pub anchor: String,
    /// Error text when the computation itself failed.
    pub error: Option<String>,
}

impl Check {
    /// `|lhs - rhs| <= tol`.
    pub fn close(name: impl Into<String>, anchor: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let r = (lhs - rhs).abs();
        Check {
            name: name.into(),
            values: vec![("lhs".into(), lhs), ("rhs".into(), rhs), ("residual".into(), r)],
            tolerance: tol,
            pass: r <= tol,
            anchor: anchor.into(),
            error: None,
        }
    }

    /// `|value| <= tol`.
    pub fn small(name: impl Into<String>, anchor: &str, label: &str, value: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            values: vec![(label.into(), value)],
            tolerance: tol,
            pass: value.abs() <= tol,
            anchor: anchor.into(),
            error: None,
        }
    }

    /// A yes/no condition with supporting values; tolerance 0.
    pub fn holds(name: impl Into<String>, anchor: &str, pass: bool, values: Vec<(String, f64)>) -> Self {
        Check { name: name.into(), values, tolerance: 0.0, pass, anchor: anchor.into(), error: None }
    }

    pub fn failed(name: impl Into<String>, anchor: &str, err: impl std::fmt::Display) -> Self {
        Check {
            name: name.into(),
            values: Vec::new(),
            tolerance: 0.0,
            pass: false,
            anchor: anchor.into(),
            error: Some(err.to_string()),
        }
    }

    pub fn from_result(name: impl Into<String>, anchor: &str, r: crate::Result<Check>) -> Self {
        let name = name.into();
        r.unwrap_or_else(|e| Check::failed(name, anchor, e))
    }
}

/// A tabular sweep written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    /// Missing values are written as empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let fields: Vec<String> = r.iter().map(|v| v.map(num).unwrap_or_default()).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub subcommand: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Named outcomes that are not pass/fail, e.g. divergence verdicts.
    pub results: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

pub const CHECKS_HEADER: &str = "name,values,tolerance,pass,anchor";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn new(subcommand: &str, scenario: &str, scenario_bytes: &[u8], seed: u64) -> Self {
        Report {
            subcommand: subcommand.into(),
            scenario: scenario.into(),
            scenario_sha256: sha256_hex(scenario_bytes),
            seed,
            checks: Vec::new(),
            results: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "subcommand: {}", self.subcommand);
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "scenario sha256: {}", self.scenario_sha256);
        let _ = writeln!(s, "seed: {}", self.seed);
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            let _ = writeln!(s, "    checks: {}", c.anchor);
            for (k, v) in &c.values {
                let _ = writeln!(s, "    {k} = {}", num(*v));
            }
            let _ = writeln!(s, "    tolerance = {}", num(c.tolerance));
            if let Some(e) = &c.error {
                let _ = writeln!(s, "    error: {e}");
            }
        }
        for (k, v) in &self.results {
            let _ = writeln!(s, "result {k}: {v}");
        }
        for t in &self.tables {
            let _ = writeln!(s, "table {} ({} rows)", t.file, t.rows.len());
        }
        let _ = writeln!(s, "summary: {} passed, {} failed", self.checks.len() - self.failures(), self.failures());
        s
    }

    /// One row per check; values as `key=value` pairs joined by `;`.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from(CHECKS_HEADER);
        out.push('\n');
        for c in &self.checks {
            let mut vals: Vec<String> = c.values.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
            if let Some(e) = &c.error {
                vals.push(format!("error={e}"));
            }
            let row = [
                csv_field(&c.name),
                csv_field(&vals.join(";")),
                num(c.tolerance),
                c.pass.to_string(),
                csv_field(&c.anchor),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Write `<subcommand>.txt`, `<subcommand>-checks.csv` and every table;
    /// returns the paths written.
    pub fn emit(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        let mut put = |name: String, body: &str| -> std::io::Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            paths.push(p);
            Ok(())
        };
        put(format!("{}.txt", self.subcommand), &self.to_text())?;
        put(format!("{}-checks.csv", self.subcommand), &self.checks_csv())?;
        for t in &self.tables {
            put(t.file.clone(), &t.to_csv())?;
        }
        Ok(paths)
    }
}
