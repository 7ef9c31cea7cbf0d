//! CSV tables with six significant digits, and the JSON manifest written
//! next to every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spef_core::{BPath, FStar, MechanismKind};

use crate::sim::{CurvePoint, ExperimentConfig, ExperimentRun};
use crate::{Error, Result};

/// `x` with six significant digits: plain notation for exponents in
/// `[-4, 6)`, scientific otherwise, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let fixed = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A header plus rows of already formatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Columns of a summary table.
pub const SUMMARY_HEADER: &[&str] = &[
    "config",
    "estimator",
    "parameter",
    "truth",
    "mean",
    "median",
    "mse",
    "bias",
    "sd",
    "replications_used",
    "failures",
];

/// One row per estimator and coordinate of every labelled run.
pub fn summary_table(runs: &[(String, ExperimentRun)]) -> CsvTable {
    let mut t = CsvTable::new(SUMMARY_HEADER);
    for (label, run) in runs {
        for s in &run.summaries {
            t.push(vec![
                label.clone(),
                s.estimator.label().to_string(),
                format!("beta{}", s.component + 1),
                fmt_sig(s.truth),
                fmt_sig(s.mean),
                fmt_sig(s.median),
                fmt_sig(s.mse),
                fmt_sig(s.bias),
                fmt_sig(s.sd),
                s.replications_used.to_string(),
                s.failures.to_string(),
            ]);
        }
    }
    t
}

/// `(x, median_value)` pairs; points without a value are left out.
pub fn curve_table(x_name: &str, points: &[CurvePoint]) -> CsvTable {
    let mut t = CsvTable::new(&[x_name, "median_value"]);
    for p in points {
        if let Some(m) = p.median {
            t.push(vec![fmt_sig(p.x), fmt_sig(m)]);
        }
    }
    t
}

/// `<path>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Echo of one configuration with every estimator switch.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub label: String,
    pub experiment: String,
    pub n: usize,
    pub replications: usize,
    pub beta_true: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub mechanism: String,
    pub c: f64,
    pub kernel: String,
    /// `"rule"` or the fixed bandwidth.
    pub index_bandwidth: String,
    pub y_bandwidth: String,
    pub b_path: String,
    pub f_star: String,
    pub renormalize_loo: bool,
    pub quad_points: usize,
    pub profile_box: [f64; 2],
    pub rank_box: [f64; 2],
    pub master_seed: u64,
    /// Failed fits per estimator.
    pub failures: BTreeMap<String, usize>,
}

fn bandwidth_label(h: Option<f64>) -> String {
    h.map_or_else(|| "rule".to_string(), |h| h.to_string())
}

impl ConfigEcho {
    pub fn new(label: &str, cfg: &ExperimentConfig) -> Self {
        let p = &cfg.profile;
        Self {
            label: label.to_string(),
            experiment: cfg.experiment.name().to_string(),
            n: cfg.n,
            replications: cfg.replications,
            beta_true: cfg.beta_true.clone(),
            mu: cfg.mu,
            sigma2: cfg.sigma2,
            mechanism: match (cfg.experiment, cfg.mechanism) {
                (crate::sim::Experiment::Exp3, Some(MechanismKind::DecomposableIndicator)) => "indicator",
                (crate::sim::Experiment::Exp3, Some(MechanismKind::NondecomposableLine)) => "line",
                _ => "none",
            }
            .to_string(),
            c: cfg.c,
            kernel: p.family.name().to_string(),
            index_bandwidth: bandwidth_label(p.index_bandwidth),
            y_bandwidth: bandwidth_label(p.y_bandwidth),
            b_path: match p.b_path {
                BPath::Quadrature => "quadrature",
                BPath::IndexIntegral => "index_integral",
            }
            .to_string(),
            f_star: match p.f_star {
                FStar::Tilde => "tilde",
                FStar::Hat => "hat",
            }
            .to_string(),
            renormalize_loo: p.renormalize_loo,
            quad_points: p.quad_points,
            profile_box: [cfg.profile_box.0, cfg.profile_box.1],
            rank_box: [cfg.rank_box.0, cfg.rank_box.1],
            master_seed: cfg.master_seed,
            failures: BTreeMap::new(),
        }
    }

    pub fn with_run(mut self, cfg: &ExperimentConfig, run: &ExperimentRun) -> Self {
        for &e in cfg.estimators() {
            self.failures.insert(e.label().to_string(), run.failures(e));
        }
        self
    }
}

/// Fixed conventions of the harness, stated in every manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub sd: &'static str,
    pub bias: &'static str,
    pub failures: &'static str,
    pub seeds: &'static str,
    pub optimizer: &'static str,
    pub isolated_y: &'static str,
    pub normalizer: &'static str,
    pub index_integral: &'static str,
    pub rank_box: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            sd: "sample standard deviation, divisor r - 1",
            bias: "mean - truth (signed)",
            failures: "failed replications excluded from the statistics and counted",
            seeds: "ChaCha8 keyed by master_seed, stream = replication index",
            optimizer: "d = 1: 41-point scan then golden section (tol 1e-4); d >= 2: Nelder-Mead \
                        from max(3, 2d) Latin-hypercube starts (spread 1e-6, 500 iterations)",
            isolated_y: "full-sample curve undefined when no response lies within 3 bandwidths \
                         or the kernel-weight sum is below 1e-300",
            normalizer: "(1/n) sum of full-sample f~(Y_i) / leave-one-out p^(Y_i)",
            index_integral: "trapezoid with shared step max|theta| / 200",
            rank_box: "rank search box is a reconstruction, not a known original setting",
        }
    }
}

/// Sidecar describing how an output file was produced.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub output: String,
    pub master_seed: u64,
    pub replications: usize,
    pub threads: Option<usize>,
    pub wall_time_s: f64,
    /// Failed fits per estimator, summed over configurations.
    pub failures: BTreeMap<String, usize>,
    pub configs: Vec<ConfigEcho>,
    pub conventions: Conventions,
}

impl RunManifest {
    pub fn new(command: &str, output: &Path, configs: Vec<ConfigEcho>) -> Self {
        let mut failures = BTreeMap::new();
        for c in &configs {
            for (k, v) in &c.failures {
                *failures.entry(k.clone()).or_insert(0) += v;
            }
        }
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            output: output.display().to_string(),
            master_seed: configs.first().map_or(0, |c| c.master_seed),
            replications: configs.first().map_or(0, |c| c.replications),
            threads: None,
            wall_time_s: 0.0,
            failures,
            configs,
            conventions: Conventions::default(),
        }
    }

    pub fn write(&self, output: &Path) -> Result<()> {
        let path = manifest_path(output);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
