use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::csv::real;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    /// Logged without a pass threshold.
    Info,
    Pass,
    /// Under-resolved; never counts as a pass.
    Inconclusive,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Info => "info",
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
        })
    }
}

/// A named check with the value it measured and the threshold it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub threshold: String,
}

impl Verdict {
    pub fn check(name: &str, ok: bool, value: f64, threshold: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            value,
            threshold: threshold.into(),
        }
    }

    pub fn info(name: &str, value: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            value,
            threshold: note.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Named column set; every row has one entry per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// Outcome of one experiment. `runtime` is informational and is not written
/// to the report files, which depend only on parameters and seeds.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<Verdict>,
    pub seeds: Vec<u64>,
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            parameters: Vec::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            seeds: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Worst status among the verdicts, ignoring informational ones; an
    /// experiment without thresholded verdicts passes.
    pub fn overall(&self) -> Status {
        self.verdicts
            .iter()
            .map(|v| v.status)
            .filter(|s| *s != Status::Info)
            .max()
            .unwrap_or(Status::Pass)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, t) in self.tables.iter().enumerate() {
            if i > 0 {
                writeln!(w)?;
            }
            writeln!(w, "# table={}", t.name)?;
            writeln!(w, "{}", t.columns.join(","))?;
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|v| real(*v)).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "name={}", self.name)?;
        for (k, v) in &self.parameters {
            writeln!(w, "param.{k}={v}")?;
        }
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        writeln!(w, "seeds={}", seeds.join(","))?;
        for v in &self.verdicts {
            writeln!(w, "verdict.{}={}", v.name, v.status)?;
            writeln!(w, "verdict.{}.value={}", v.name, real(v.value))?;
            writeln!(w, "verdict.{}.threshold={}", v.name, v.threshold)?;
        }
        writeln!(w, "overall={}", self.overall())?;
        Ok(())
    }

    /// Write `<dir>/<name>.csv` and `<dir>/<name>.summary`, each starting
    /// with `header`.
    pub fn write_files(&self, dir: &Path, header: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.name));
        let summary = dir.join(format!("{}.summary", self.name));
        let mut buf = header.as_bytes().to_vec();
        self.write_csv(&mut buf)?;
        fs::write(&csv, buf)?;
        let mut buf = header.as_bytes().to_vec();
        self.write_summary(&mut buf)?;
        fs::write(&summary, buf)?;
        Ok((csv, summary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_takes_worst_thresholded_status() {
        let mut r = ExperimentReport::new("x");
        assert_eq!(r.overall(), Status::Pass);
        r.verdicts.push(Verdict::info("note", 1.0, "no threshold"));
        r.verdicts.push(Verdict::check("a", true, 0.1, "< 1"));
        assert_eq!(r.overall(), Status::Pass);
        r.verdicts.push(Verdict {
            status: Status::Inconclusive,
            ..Verdict::check("b", true, 0.0, "")
        });
        assert_eq!(r.overall(), Status::Inconclusive);
        r.verdicts.push(Verdict::check("c", false, 2.0, "< 1"));
        assert_eq!(r.overall(), Status::Fail);
    }

    #[test]
    fn summary_lists_thresholds() {
        let mut r = ExperimentReport::new("demo");
        r.param("alpha", 1.5);
        r.seeds.push(3);
        r.verdicts.push(Verdict::check("flat", true, 1.2, "max/min <= 1.5"));
        let mut out = Vec::new();
        r.write_summary(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("verdict.flat.threshold=max/min <= 1.5"));
        assert!(s.ends_with("overall=pass\n"));
    }
}
