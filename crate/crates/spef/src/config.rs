//! Flat `key = value` experiment files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Keys are the fields of [`ExperimentConfig`]:
//!
//! ```text
//! experiment = exp3
//! n = 400
//! replications = 100
//! beta_true = 2
//! mu = 2
//! sigma2 = 1.1
//! mechanism = line        # none | indicator | line
//! c = 0.9
//! kernel = gaussian       # gaussian | epanechnikov
//! index_bandwidth = rule  # rule | <h>
//! y_bandwidth = rule
//! b_path = quadrature     # quadrature | index_integral
//! f_star = tilde          # tilde | hat
//! renormalize_loo = true
//! quad_points = 401
//! profile_box = -10, 10
//! rank_box = -250, 250
//! master_seed = 7
//! ```

use std::path::Path;
use std::str::FromStr;

use spef_core::{BPath, FStar, KernelFamily, MechanismKind};

use crate::sim::{Experiment, ExperimentConfig};
use crate::{Error, Result};

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "experiment",
    "n",
    "replications",
    "beta_true",
    "mu",
    "sigma2",
    "mechanism",
    "c",
    "kernel",
    "index_bandwidth",
    "y_bandwidth",
    "b_path",
    "f_star",
    "renormalize_loo",
    "quad_points",
    "profile_box",
    "rank_box",
    "master_seed",
];

/// Keys that define a row of a `table*` layout.
pub const ROW_KEYS: &[&str] = &["experiment", "n", "beta_true", "mu", "sigma2", "mechanism", "c"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// A parsed experiment file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<Entry>,
}

impl FromStr for ConfigFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::config(line, format!("expected `key = value`, found `{body}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::config(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(Error::config(line, format!("missing value for `{key}`")));
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(Error::config(line, format!("`{key}` already set on line {}", prev.line)));
            }
            entries.push(Entry { line, key: key.to_string(), value: value.to_string() });
        }
        Ok(Self { entries })
    }
}

fn parse<T: FromStr>(e: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value.parse::<T>().map_err(|err| Error::config(e.line, format!("`{}`: {err}", e.key)))
}

fn parse_list(e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|err| Error::config(e.line, format!("`{}`: `{}`: {err}", e.key, s.trim())))
        })
        .collect()
}

fn parse_box(e: &Entry) -> Result<(f64, f64)> {
    match parse_list(e)?.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => Err(Error::config(e.line, format!("`{}` takes two values `lo, hi`", e.key))),
    }
}

fn parse_bandwidth(e: &Entry) -> Result<Option<f64>> {
    if e.value == "rule" {
        return Ok(None);
    }
    let h: f64 = parse(e)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::config(e.line, format!("`{}` must be positive", e.key)));
    }
    Ok(Some(h))
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?.parse()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// The design named by `experiment`, if present.
    pub fn experiment(&self) -> Result<Option<Experiment>> {
        self.get("experiment").map(parse).transpose()
    }

    /// Fails on the first key from `keys`, with its line.
    pub fn forbid(&self, keys: &[&str], why: &str) -> Result<()> {
        match self.entries.iter().find(|e| keys.contains(&e.key.as_str())) {
            Some(e) => Err(Error::config(e.line, format!("`{}` {why}", e.key))),
            None => Ok(()),
        }
    }

    /// Writes every entry into `cfg`. `experiment` is read by
    /// [`ConfigFile::experiment`] and skipped here.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        for e in &self.entries {
            match e.key.as_str() {
                "experiment" => {}
                "n" => cfg.n = parse(e)?,
                "replications" => cfg.replications = parse(e)?,
                "beta_true" => cfg.beta_true = parse_list(e)?,
                "mu" => cfg.mu = parse(e)?,
                "sigma2" => cfg.sigma2 = parse(e)?,
                "mechanism" => {
                    cfg.mechanism = match e.value.as_str() {
                        "none" => None,
                        "indicator" => Some(MechanismKind::DecomposableIndicator),
                        "line" => Some(MechanismKind::NondecomposableLine),
                        other => {
                            return Err(Error::config(
                                e.line,
                                format!("unknown mechanism `{other}` (none, indicator or line)"),
                            ))
                        }
                    }
                }
                "c" => cfg.c = parse(e)?,
                "kernel" => cfg.profile.family = parse::<KernelFamily>(e)?,
                "index_bandwidth" => cfg.profile.index_bandwidth = parse_bandwidth(e)?,
                "y_bandwidth" => cfg.profile.y_bandwidth = parse_bandwidth(e)?,
                "b_path" => {
                    cfg.profile.b_path = match e.value.as_str() {
                        "quadrature" => BPath::Quadrature,
                        "index_integral" => BPath::IndexIntegral,
                        other => {
                            return Err(Error::config(e.line, format!("unknown b_path `{other}`")))
                        }
                    }
                }
                "f_star" => {
                    cfg.profile.f_star = match e.value.as_str() {
                        "tilde" => FStar::Tilde,
                        "hat" => FStar::Hat,
                        other => {
                            return Err(Error::config(e.line, format!("unknown f_star `{other}`")))
                        }
                    }
                }
                "renormalize_loo" => cfg.profile.renormalize_loo = parse(e)?,
                "quad_points" => cfg.profile.quad_points = parse(e)?,
                "profile_box" => cfg.profile_box = parse_box(e)?,
                "rank_box" => cfg.rank_box = parse_box(e)?,
                "master_seed" => cfg.master_seed = parse(e)?,
                other => unreachable!("key `{other}` passed parsing"),
            }
        }
        Ok(())
    }

    /// Defaults of the named design (`exp1` when absent) with every entry
    /// applied.
    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.experiment()?.unwrap_or(Experiment::Exp1));
        self.apply(&mut cfg)?;
        Ok(cfg)
    }
}
