//! Experiment runner: flat configs, cached eigenpairs and constants,
//! JSON/CSV reports, and parameter sweeps.

pub mod config;
pub mod report;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::constants::{estimate_constants, ConstantEstimates};
use crate::analysis::{sublaplacian_spectrum_cached, SpectralProjector};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::pointsets::{verify_dense, verify_separated, Certificate, PointSet};

pub use config::{ExperimentConfig, ExperimentId};
pub use report::{cell, Check, ExperimentReport, Table, Verdict, VERSION_HASH};

/// Per-run state: configuration and cache accounting.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub hits: usize,
    pub misses: usize,
}

impl Ctx<'_> {
    pub fn cache_dir(&self) -> PathBuf {
        self.cfg.cache.clone().unwrap_or_else(|| self.cfg.output.join("cache"))
    }

    fn count(&mut self, hit: bool) {
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
    }

    pub fn projector(&mut self, grid: Grid, omega: f64) -> Result<Arc<SpectralProjector>> {
        let dir = self.cache_dir();
        let (p, hit) = sublaplacian_spectrum_cached(Arc::new(grid), omega, Some(&dir))?;
        self.count(hit);
        Ok(Arc::new(p))
    }

    /// Constant estimates for `proj`, cached next to its eigenpairs.
    pub fn constants(&mut self, proj: &SpectralProjector) -> Result<ConstantEstimates> {
        let dir = self.cache_dir();
        let key = SpectralProjector::cache_key(&proj.grid, proj.omega, &proj.bc);
        let path = dir.join(format!("{key}-{}.constants.json", self.cfg.seed));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(c) = serde_json::from_str::<ConstantEstimates>(&text) {
                self.count(true);
                return Ok(c);
            }
        }
        let c = estimate_constants(proj, self.cfg.seed)?;
        fs::create_dir_all(&dir)?;
        let tmp = path.with_extension(format!("tmp-{}-{:?}", std::process::id(), std::thread::current().id()));
        fs::write(&tmp, serde_json::to_string_pretty(&c)?)?;
        fs::rename(tmp, &path)?;
        self.count(false);
        Ok(c)
    }
}

/// What one experiment produces before it is wrapped in a report.
pub(crate) struct Outcome {
    pub checks: Vec<Check>,
    pub table: Table,
    pub details: serde_json::Value,
    pub points: Option<PointSet>,
}

pub(crate) fn check(name: &str, verdict: Verdict, detail: impl Into<String>) -> Check {
    Check { name: name.to_string(), verdict, detail: detail.into() }
}

/// Runs the configured experiment. Nothing is written.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let t0 = Instant::now();
    let mut ctx = Ctx { cfg, hits: 0, misses: 0 };
    let out = run::dispatch(&mut ctx)?;
    Ok(ExperimentReport {
        experiment: cfg.experiment.name().to_string(),
        config: cfg.values.clone(),
        version: VERSION_HASH.to_string(),
        checks: out.checks,
        table: out.table,
        details: out.details,
        wall_seconds: t0.elapsed().as_secs_f64(),
        cache_hits: ctx.hits,
        cache_misses: ctx.misses,
        points: out.points,
    })
}

/// Runs and writes into the configured output directory.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let rep = run(cfg)?;
    rep.write(&cfg.output)?;
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    R,
    Omega,
    Grid,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(Self::R),
            "omega" | "ω" => Ok(Self::Omega),
            "grid" => Ok(Self::Grid),
            _ => Err(Error::Config(format!("sweep parameter must be r, omega or grid, got `{s}`"))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::R => "r",
            Self::Omega => "omega",
            Self::Grid => "grid",
        }
    }

    /// Config key the parameter sets for this experiment, if it applies.
    pub fn key(self, cfg: &ExperimentConfig) -> Option<&'static str> {
        use ExperimentId::*;
        let e = cfg.experiment;
        match self {
            Self::R => matches!(e, Shannon | BeurlingScan | WaveletFrame | Oscillation | Constants).then_some("r"),
            Self::Omega => matches!(e, BeurlingScan | Heisenberg | Partition | Constants).then_some("omega"),
            Self::Grid => Some(if cfg.model == "H1" { "h" } else { "nodes" }),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub experiment: String,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub config: std::collections::BTreeMap<String, String>,
    pub version: String,
    /// Row reports, in the order of `values`.
    pub rows: Vec<ExperimentReport>,
    pub trend_checks: Vec<Check>,
    pub table: Table,
    pub wall_seconds: f64,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ExperimentReport::passed) && self.trend_checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    /// `report.json` and `table.csv` at the top, one subdirectory per row.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, rep) in self.rows.iter().enumerate() {
            rep.write(&dir.join(format!("row{i:03}")))?;
        }
        serde_json::to_writer_pretty(std::io::BufWriter::new(fs::File::create(dir.join("report.json"))?), self)?;
        fs::write(dir.join("table.csv"), self.table.to_csv())?;
        Ok(())
    }
}

/// One run per value with the parameter overridden; rows run in parallel.
pub fn sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<SweepReport> {
    let t0 = Instant::now();
    let key = param.key(cfg).ok_or_else(|| {
        Error::Config(format!("parameter `{}` does not apply to experiment `{}`", param.name(), cfg.experiment))
    })?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let cfgs = values
        .iter()
        .map(|v| {
            let text = if key == "nodes" { format!("{}", v.round() as i64) } else { cell(*v) };
            cfg.with(key, &text)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = cfgs.par_iter().map(run).collect::<Result<Vec<_>>>()?;
    // prefix the swept value unless the row tables already carry it
    let prefix = rows.first().is_some_and(|r| !r.table.columns.iter().any(|c| c == key));
    let mut table = Table::default();
    if let Some(first) = rows.first() {
        let head = prefix.then(|| key.to_string());
        table.columns = head.into_iter().chain(first.table.columns.iter().cloned()).collect();
    }
    for (v, rep) in values.iter().zip(&rows) {
        for r in &rep.table.rows {
            let head = prefix.then(|| cell(*v));
            table.push(head.into_iter().chain(r.iter().cloned()).collect());
        }
    }
    let trend_checks = run::trend_checks(cfg, param, values, &rows);
    Ok(SweepReport {
        experiment: cfg.experiment.name().to_string(),
        param,
        values: values.to_vec(),
        config: cfg.values.clone(),
        version: VERSION_HASH.to_string(),
        rows,
        trend_checks,
        table,
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub points: usize,
    pub separated: Option<Certificate>,
    pub dense: Option<Certificate>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.separated.as_ref().is_none_or(|c| c.passed) && self.dense.as_ref().is_none_or(|c| c.passed)
    }
}

/// Certifies a point set on a grid of its region with spacing `h`;
/// `periodic` wraps every axis (sets on a circle).
pub fn verify(set: &PointSet, sep: Option<f64>, dense: Option<f64>, h: f64, periodic: bool) -> Result<VerifyReport> {
    if sep.is_none() && dense.is_none() {
        return Err(Error::Config("give --sep and/or --dense".into()));
    }
    for r in [sep, dense].into_iter().flatten() {
        if !(r > 0.0) {
            return Err(Error::Config(format!("radii must be positive, got {r}")));
        }
    }
    let grid = run::region_grid(set, h, periodic)?;
    Ok(VerifyReport {
        points: set.len(),
        separated: sep.map(|s| verify_separated(set, s, &grid)).transpose()?,
        dense: dense.map(|r| verify_dense(set, r, &grid)).transpose()?,
    })
}
