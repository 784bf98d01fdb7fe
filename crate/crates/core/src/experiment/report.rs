use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::pointsets::PointSet;

/// Library provenance: hash of the crate sources at build time.
pub const VERSION_HASH: &str = env!("GROUPSAMPLE_SOURCE_HASH");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesisNotMet,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// Column-labelled numeric table; cells are preformatted so that CSV
/// output is stable.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest round-trip form, so equal values always print equally.
pub fn cell(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub version: String,
    pub checks: Vec<Check>,
    pub table: Table,
    /// Experiment-specific measurements.
    pub details: serde_json::Value,
    pub wall_seconds: f64,
    pub cache_hits: usize,
    pub cache_misses: usize,
    #[serde(skip)]
    pub points: Option<PointSet>,
}

impl ExperimentReport {
    /// Pass or hypothesis-not-met everywhere.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `report.json`, `table.csv` and (when present) `points.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let f = BufWriter::new(fs::File::create(dir.join("report.json"))?);
        serde_json::to_writer_pretty(f, self)?;
        fs::write(dir.join("table.csv"), self.table.to_csv())?;
        if let Some(p) = &self.points {
            p.write_csv(BufWriter::new(fs::File::create(dir.join("points.csv"))?))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_and_csv() {
        assert_eq!(cell(0.1), "0.1");
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(cell(1.25e-14), "1.25e-14");
        assert_eq!(cell(-3.0), "-3");
        let mut t = Table::new(&["r", "a"]);
        t.push(vec![cell(0.5), cell(1.0)]);
        t.push(vec![cell(0.25), cell(f64::INFINITY)]);
        assert_eq!(t.to_csv(), "r,a\n0.5,1\n0.25,inf\n");
        assert_eq!(t.column("a").unwrap()[1], f64::INFINITY);
        assert!(t.column("b").is_none());
    }

    #[test]
    fn hypothesis_not_met_does_not_fail() {
        let mut rep = ExperimentReport {
            experiment: "x".into(),
            config: BTreeMap::new(),
            version: VERSION_HASH.into(),
            checks: vec![Check { name: "a".into(), verdict: Verdict::HypothesisNotMet, detail: String::new() }],
            table: Table::default(),
            details: serde_json::Value::Null,
            wall_seconds: 0.0,
            cache_hits: 0,
            cache_misses: 0,
            points: None,
        };
        assert!(rep.passed());
        rep.checks.push(Check { name: "b".into(), verdict: Verdict::Fail, detail: String::new() });
        assert!(!rep.passed());
        assert_eq!(VERSION_HASH.len(), 64);
    }
}
