//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Shannon,
    BeurlingScan,
    WaveletFrame,
    Heisenberg,
    Partition,
    Quasilattice,
    Oscillation,
    Constants,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        Self::Shannon,
        Self::BeurlingScan,
        Self::WaveletFrame,
        Self::Heisenberg,
        Self::Partition,
        Self::Quasilattice,
        Self::Oscillation,
        Self::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Shannon => "shannon",
            Self::BeurlingScan => "beurling-scan",
            Self::WaveletFrame => "wavelet-frame",
            Self::Heisenberg => "heisenberg",
            Self::Partition => "partition",
            Self::Quasilattice => "quasilattice",
            Self::Oscillation => "oscillation",
            Self::Constants => "constants",
        }
    }

    /// Models the experiment can run on; the first is the default.
    pub fn models(self) -> &'static [&'static str] {
        match self {
            Self::Shannon | Self::BeurlingScan => &["R"],
            Self::WaveletFrame => &["affine"],
            Self::Heisenberg | Self::Constants => &["H1"],
            Self::Partition | Self::Oscillation => &["R", "H1"],
            Self::Quasilattice => &["H1", "affine"],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Recognized keys. Anything else is rejected.
pub const KEYS: [&str; 23] = [
    "experiment", "model", "seed", "output", "cache",
    "half", "nodes", "h", "m", "mt",
    "r", "omega", "band", "step", "t",
    "radii", "r_sqrt_omega", "spacing", "spacings",
    "functions", "configs", "tol", "tol_aux",
];

/// Keys whose values are radii or scales and must be positive.
const POSITIVE: [&str; 10] = ["half", "h", "r", "omega", "band", "step", "t", "radii", "r_sqrt_omega", "tol"];

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub model: String,
    pub seed: u64,
    pub output: PathBuf,
    /// Cache directory for eigenpairs and constant estimates.
    pub cache: Option<PathBuf>,
    /// Keys set explicitly, in sorted order, as given.
    pub values: BTreeMap<String, String>,
}

fn split_line(line: &str, lineno: usize) -> Result<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`, got `{line}`")))?;
    Ok(Some((k.trim().to_string(), v.trim().to_string())))
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

impl ExperimentConfig {
    /// Parses the file text, then applies `overrides` (`key=value`).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if let Some((k, v)) = split_line(line, i + 1)? {
                if values.insert(k.clone(), v).is_some() {
                    return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
                }
            }
        }
        for o in overrides {
            let (k, v) = split_line(o, 0)?
                .ok_or_else(|| Error::Config(format!("empty override `{o}`")))?;
            values.insert(k, v);
        }
        Self::from_map(values)
    }

    pub fn from_map(mut values: BTreeMap<String, String>) -> Result<Self> {
        for k in values.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
        }
        let experiment: ExperimentId = values
            .get("experiment")
            .ok_or_else(|| Error::Config("missing key `experiment`".into()))?
            .parse()?;
        let model = values.get("model").cloned().unwrap_or_else(|| experiment.models()[0].to_string());
        if !experiment.models().contains(&model.as_str()) {
            return Err(Error::Config(format!(
                "experiment `{experiment}` runs on {:?}, not `{model}`",
                experiment.models()
            )));
        }
        values.insert("model".into(), model.clone());
        let seed = values.get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0);
        let output = PathBuf::from(values.get("output").map(String::as_str).unwrap_or("out"));
        let cache = values.get("cache").map(PathBuf::from);
        let cfg = Self { experiment, model, seed, output, cache, values };
        for key in POSITIVE {
            if cfg.values.contains_key(key) {
                for x in cfg.list(key, &[])? {
                    if !(x > 0.0) || !x.is_finite() {
                        return Err(Error::Config(format!("`{key}` must be positive, got {x}")));
                    }
                }
            }
        }
        for key in ["nodes", "m", "mt", "spacing", "functions", "configs"] {
            if cfg.values.contains_key(key) && cfg.usize(key, 0)? == 0 {
                return Err(Error::Config(format!("`{key}` must be at least 1")));
            }
        }
        Ok(cfg)
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        self.values.get(key).map(|v| parse_num(key, v)).transpose().map(|x| x.unwrap_or(default))
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        self.values.get(key).map(|v| parse_num(key, v)).transpose().map(|x| x.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|x| parse_num(key, x.trim())).collect(),
        }
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|x| parse_num(key, x.trim())).collect(),
        }
    }

    /// Copy with one key replaced, revalidated.
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut values = self.values.clone();
        values.insert(key.to_string(), value.to_string());
        Self::from_map(values)
    }

    /// Canonical `key = value` text.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
