//! Report rows, artifacts and atomic CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// One comparison (or recorded value) of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub task: String,
    pub target_name: String,
    pub theory_value: Option<f64>,
    pub empirical_value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// Result the row tests, or `plumbing`.
    pub anchor: String,
}

impl ReportRow {
    pub fn new(task: &str, target: impl Into<String>, anchor: &str) -> Self {
        ReportRow {
            task: task.to_string(),
            target_name: target.into(),
            theory_value: None,
            empirical_value: None,
            tolerance: None,
            pass: true,
            anchor: anchor.to_string(),
        }
    }

    pub fn theory(mut self, x: f64) -> Self {
        self.theory_value = Some(x);
        self
    }

    pub fn empirical(mut self, x: f64) -> Self {
        self.empirical_value = Some(x);
        self
    }

    /// Pass iff `|empirical / theory - 1| <= tol`.
    pub fn relative(mut self, tol: f64) -> Self {
        let (t, e) = (
            self.theory_value.unwrap_or(f64::NAN),
            self.empirical_value.unwrap_or(f64::NAN),
        );
        self.tolerance = Some(tol);
        self.pass = (e / t - 1.0).abs() <= tol;
        self
    }

    /// Pass iff `|empirical - theory| <= tol`.
    pub fn absolute(mut self, tol: f64) -> Self {
        let (t, e) = (
            self.theory_value.unwrap_or(f64::NAN),
            self.empirical_value.unwrap_or(f64::NAN),
        );
        self.tolerance = Some(tol);
        self.pass = (e - t).abs() <= tol;
        self
    }

    /// Pass iff `empirical <= tol`.
    pub fn at_most(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self.pass = self.empirical_value.is_some_and(|e| e <= tol);
        self
    }

    pub fn with_pass(mut self, tol: Option<f64>, pass: bool) -> Self {
        self.tolerance = tol;
        self.pass = pass;
        self
    }
}

/// Files written by tasks, consumed by the plotting stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Artifact {
    Series {
        path: PathBuf,
    },
    /// `k,alpha_hat` columns.
    HillPath {
        path: PathBuf,
        alpha: f64,
    },
    /// `n,iqr` columns.
    RateRegression {
        path: PathBuf,
        statistic: String,
        lag: usize,
        slope: f64,
        intercept: f64,
    },
    /// One normalized maximum per line.
    MaximaSample {
        path: PathBuf,
        n: usize,
        kappa: f64,
        alpha: f64,
    },
}

impl Artifact {
    pub fn path(&self) -> &Path {
        match self {
            Artifact::Series { path }
            | Artifact::HillPath { path, .. }
            | Artifact::RateRegression { path, .. }
            | Artifact::MaximaSample { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub model_id: String,
    pub rows: Vec<ReportRow>,
    pub artifacts: Vec<Artifact>,
    /// Set when a task errored; the report is then partial.
    pub failed: Option<String>,
}

pub const REPORT_HEADER: [&str; 7] = [
    "task",
    "target_name",
    "theory_value",
    "empirical_value",
    "tolerance",
    "pass",
    "anchor",
];

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.failed.is_none() && self.rows.iter().all(|r| r.pass)
    }

    /// Report CSV: provenance comment, header and rows; a trailing `# FAILED`
    /// line marks a partial report.
    pub fn to_csv(&self) -> Result<String> {
        let mut buf = format!("# seed={} model={}\n", self.seed, self.model_id).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(REPORT_HEADER)?;
            for r in &self.rows {
                w.write_record([
                    r.task.clone(),
                    r.target_name.clone(),
                    fmt_opt(r.theory_value),
                    fmt_opt(r.empirical_value),
                    fmt_opt(r.tolerance),
                    r.pass.to_string(),
                    r.anchor.clone(),
                ])?;
            }
            w.flush()?;
        }
        if let Some(msg) = &self.failed {
            writeln!(buf, "# FAILED: {}", msg.replace('\n', " "))?;
        }
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_gates() {
        let r = ReportRow::new("t", "x", "plumbing")
            .theory(2.0)
            .empirical(2.4);
        assert!(r.clone().relative(0.25).pass);
        assert!(!r.clone().relative(0.1).pass);
        assert!(r.clone().absolute(0.5).pass);
        assert!(!r.clone().at_most(2.0).pass);
        let missing = ReportRow::new("t", "x", "plumbing").relative(0.1);
        assert!(!missing.pass);
    }

    #[test]
    fn csv_layout_and_failed_marker() {
        let mut rep = ExperimentReport {
            seed: 3,
            model_id: "nelson-0".into(),
            rows: vec![ReportRow::new("constants", "alpha", "Laplace exponent root").theory(2.0)],
            ..Default::default()
        };
        let csv = rep.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# seed=3 model=nelson-0");
        assert_eq!(lines[1], REPORT_HEADER.join(","));
        assert_eq!(lines[2], "constants,alpha,2,,,true,Laplace exponent root");
        rep.failed = Some("task `tails` failed".into());
        assert!(rep
            .to_csv()
            .unwrap()
            .ends_with("# FAILED: task `tails` failed\n"));
        assert!(!rep.all_pass());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/report.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
