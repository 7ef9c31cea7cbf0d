//! Configurations behind the `table1`…`table5` and `figure1`…`figure3` subcommands.

use spef_core::MechanismKind;

use crate::config::{ConfigFile, ROW_KEYS};
use crate::sim::{grid, Experiment, ExperimentConfig};
use crate::{Error, Result};

/// Command-line values that take precedence over presets and config files.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    /// Replaces the sample sizes of a table.
    pub n: Option<usize>,
    /// Keeps only the table rows with this error variance; sets it for
    /// figures.
    pub sigma2: Option<f64>,
}

/// One labelled configuration of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: String,
    pub config: ExperimentConfig,
}

fn exp1(n: usize, mu: f64, sigma2: f64) -> Row {
    let mut c = ExperimentConfig::new(Experiment::Exp1);
    (c.n, c.mu, c.sigma2) = (n, mu, sigma2);
    Row { label: format!("n={n} mu={mu} sigma2={sigma2}"), config: c }
}

fn exp2(n: usize, sigma2: f64) -> Row {
    let mut c = ExperimentConfig::new(Experiment::Exp2);
    (c.n, c.sigma2) = (n, sigma2);
    Row { label: format!("n={n} sigma2={sigma2}"), config: c }
}

fn exp3(n: usize, kind: MechanismKind, c: f64) -> Row {
    let mut cfg = ExperimentConfig::new(Experiment::Exp3);
    (cfg.n, cfg.mechanism, cfg.c) = (n, Some(kind), c);
    Row { label: format!("n={n} c={c}"), config: cfg }
}

fn preset(table: u8, sizes: Option<&[usize]>) -> Result<Vec<Row>> {
    let pick = |default: &[usize]| sizes.unwrap_or(default).to_vec();
    let mut rows = Vec::new();
    match table {
        1 => {
            for n in pick(&[100]) {
                rows.extend([1.0, 2.0, 3.0].map(|mu| exp1(n, mu, 1.0)));
                rows.extend([0.1, 1.1, 1.15].map(|s| exp1(n, 1.0, s)));
                rows.extend([0.0, 1.0, 2.0, 3.0].map(|mu| exp1(n, mu, 1.15)));
            }
        }
        2 => {
            for n in pick(&[200, 400]) {
                rows.extend([0.1, 1.1, 1.15].map(|s| exp1(n, 1.0, s)));
                rows.extend([0.0, 2.0, 3.0].map(|mu| exp1(n, mu, 1.15)));
            }
        }
        3 => {
            for n in pick(&[100, 200]) {
                rows.extend([0.1, 0.5, 1.0].map(|s| exp2(n, s)));
            }
        }
        4 => {
            for n in pick(&[100, 200, 400]) {
                rows.extend([0.6, 0.7, 0.8].map(|c| exp3(n, MechanismKind::DecomposableIndicator, c)));
            }
        }
        5 => {
            for n in pick(&[100, 200, 400]) {
                rows.extend([0.85, 0.9, 0.95].map(|c| exp3(n, MechanismKind::NondecomposableLine, c)));
            }
        }
        other => return Err(Error::Experiment(format!("no table {other}"))),
    }
    Ok(rows)
}

fn finish(cfg: &mut ExperimentConfig, file: Option<&ConfigFile>, o: &Overrides) -> Result<()> {
    if let Some(f) = file {
        f.apply(cfg)?;
    }
    if let Some(s) = o.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = o.reps {
        cfg.replications = r;
    }
    cfg.validate()
}

/// Rows of table `1..=5` with the config file and flags applied. The file
/// may not set keys that define the rows.
pub fn table_rows(table: u8, file: Option<&ConfigFile>, o: &Overrides) -> Result<Vec<Row>> {
    if let Some(f) = file {
        f.forbid(ROW_KEYS, "is fixed by the table layout")?;
    }
    let sizes = o.n.map(|n| vec![n]);
    let mut rows = preset(table, sizes.as_deref())?;
    if let Some(s) = o.sigma2 {
        rows.retain(|r| r.config.sigma2 == s);
        if rows.is_empty() {
            return Err(Error::Experiment(format!("table {table} has no rows with sigma2 = {s}")));
        }
    }
    for r in &mut rows {
        finish(&mut r.config, file, o)?;
    }
    Ok(rows)
}

/// Error variance of the `figure1` curve drawn by default.
pub const FIGURE1_DEFAULT_SIGMA2: f64 = 0.1;

/// Configuration and evaluation grid of figure `1..=3`. Figure 1 is the
/// median rank surrogate over `β ∈ {0, 0.5, …, 10}`; figures 2 and 3 are
/// median base-measure estimates over `y ∈ {−3, −2.9, …, 3}`.
pub fn figure(fig: u8, file: Option<&ConfigFile>, o: &Overrides) -> Result<(ExperimentConfig, Vec<f64>)> {
    let (mut cfg, xs) = match fig {
        1 => {
            let mut c = ExperimentConfig::new(Experiment::Exp1);
            (c.mu, c.sigma2) = (0.0, FIGURE1_DEFAULT_SIGMA2);
            (c, grid(0.0, 10.0, 0.5))
        }
        2 => {
            let mut c = ExperimentConfig::new(Experiment::Exp1);
            (c.mu, c.sigma2) = (0.0, 1.15);
            (c, grid(-3.0, 3.0, 0.1))
        }
        3 => {
            let mut c = ExperimentConfig::new(Experiment::Exp2);
            (c.n, c.sigma2) = (200, 1.0);
            (c, grid(-3.0, 3.0, 0.1))
        }
        other => return Err(Error::Experiment(format!("no figure {other}"))),
    };
    if let Some(f) = file {
        f.apply(&mut cfg)?;
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(s) = o.sigma2 {
        cfg.sigma2 = s;
    }
    finish(&mut cfg, None, o)?;
    Ok((cfg, xs))
}
