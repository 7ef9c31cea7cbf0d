//! `spef`: reproduces the simulation tables and figure data, and fits user
//! data.
//!
//! Exit status is 0 on success, 1 for usage, config or input errors and 2
//! when every estimation attempt failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use spef::config::{ConfigFile, ROW_KEYS};
use spef::core::{fit, ProfileObjective};
use spef::output::{curve_table, fmt_sig, summary_table, ConfigEcho, CsvTable, RunManifest};
use spef::sim::{f_curve_median, median_curve, run_experiment, Experiment, ExperimentConfig};
use spef::tables::{figure, table_rows, Overrides};
use spef::{input, with_threads, Error};

#[derive(Parser)]
#[command(name = "spef", version, about = "Profile-likelihood estimation for the semiparametric exponential family")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed of the replication streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per configuration.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV; a `.manifest.json` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Error variance.
    #[arg(long)]
    sigma2: Option<f64>,
    /// `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, reps: self.reps, n: self.n, sigma2: self.sigma2 }
    }

    fn config_file(&self) -> spef::Result<Option<ConfigFile>> {
        self.config.as_deref().map(ConfigFile::load).transpose()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Experiment 1, n = 100.
    Table1(Common),
    /// Experiment 1, n = 200 and 400.
    Table2(Common),
    /// Experiment 2.
    Table3(Common),
    /// Experiment 3, decomposable mechanism.
    Table4(Common),
    /// Experiment 3, non-decomposable mechanism.
    Table5(Common),
    /// Median rank surrogate over β (default σ² = 0.1).
    Figure1(Common),
    /// Median base-measure estimate, Experiment 1.
    Figure2(Common),
    /// Median base-measure estimate, Experiment 2.
    Figure3(Common),
    /// Fit the profile estimator to a CSV with header `x1,…,xd,y[,delta]`.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the experiment described by `--config`.
    Custom(Common),
}

enum Failure {
    Usage(Error),
    Estimation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<(), Failure>;

fn finish_manifest(mut m: RunManifest, c: &Common, start: Instant, out: &Path) -> spef::Result<()> {
    m.threads = c.threads;
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.write(out)
}

fn run_rows(name: &str, rows: Vec<(String, ExperimentConfig)>, c: &Common, start: Instant) -> Outcome {
    let runs = with_threads(c.threads, || {
        rows.iter()
            .map(|(label, cfg)| run_experiment(cfg).map(|r| (label.clone(), r)))
            .collect::<spef::Result<Vec<_>>>()
    })??;
    summary_table(&runs).write(&c.out)?;
    let echoes = rows
        .iter()
        .zip(&runs)
        .map(|((label, cfg), (_, run))| ConfigEcho::new(label, cfg).with_run(cfg, run))
        .collect();
    finish_manifest(RunManifest::new(name, &c.out, echoes), c, start, &c.out)?;
    if runs.iter().any(|(_, r)| r.any_success()) {
        Ok(())
    } else {
        Err(Failure::Estimation("every replication failed".into()))
    }
}

fn table(k: u8, c: &Common) -> Outcome {
    let start = Instant::now();
    let file = c.config_file()?;
    let rows = table_rows(k, file.as_ref(), &c.overrides())?;
    run_rows(&format!("table{k}"), rows.into_iter().map(|r| (r.label, r.config)).collect(), c, start)
}

fn custom(c: &Common) -> Outcome {
    let start = Instant::now();
    let Some(file) = c.config_file()? else {
        return Err(Failure::Usage(Error::Experiment("custom needs --config".into())));
    };
    let mut cfg = file.to_experiment()?;
    let o = c.overrides();
    if let Some(s) = o.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = o.reps {
        cfg.replications = r;
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if let Some(s) = o.sigma2 {
        cfg.sigma2 = s;
    }
    cfg.validate()?;
    run_rows("custom", vec![("custom".to_string(), cfg)], c, start)
}

fn figure_cmd(k: u8, c: &Common) -> Outcome {
    let start = Instant::now();
    let file = c.config_file()?;
    let (cfg, xs) = figure(k, file.as_ref(), &c.overrides())?;
    let (x_name, points) = with_threads(c.threads, || match k {
        1 => median_curve(&cfg, &xs).map(|p| ("beta", p)),
        _ => f_curve_median(&cfg, &xs).map(|p| ("y", p)),
    })??;
    curve_table(x_name, &points).write(&c.out)?;
    let echo = ConfigEcho::new(&format!("figure{k}"), &cfg);
    finish_manifest(RunManifest::new(&format!("figure{k}"), &c.out, vec![echo]), c, start, &c.out)?;
    if points.iter().any(|p| p.median.is_some()) {
        Ok(())
    } else {
        Err(Failure::Estimation("no curve value could be computed".into()))
    }
}

/// `dir/name_curve.ext` for `dir/name.ext`.
fn curve_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_curve.{}", ext.to_string_lossy()),
        None => format!("{stem}_curve"),
    };
    out.with_file_name(name)
}

fn fit_cmd(c: &Common, input_path: &Path) -> Outcome {
    let start = Instant::now();
    let file = c.config_file()?;
    let mut cfg = ExperimentConfig::new(Experiment::Exp1);
    if let Some(f) = &file {
        f.forbid(ROW_KEYS, "describes simulated data and does not apply to fit")?;
        f.apply(&mut cfg)?;
    }
    let data = input::load_dataset(input_path)?;
    cfg.beta_true = vec![0.0; data.dim()];
    let observed = data.observed().map_err(|e| Failure::Estimation(e.to_string()))?;
    let result = with_threads(c.threads, || {
        let obj = ProfileObjective::new(observed, cfg.profile)?;
        fit(&obj, &cfg.profile_search())
    })?
    .map_err(|e| Failure::Estimation(e.to_string()))?;

    let mut est = CsvTable::new(&["parameter", "value"]);
    for (j, b) in result.beta_hat.iter().enumerate() {
        est.push(vec![format!("beta{}", j + 1), fmt_sig(*b)]);
    }
    est.push(vec!["loglik".into(), fmt_sig(result.loglik_at_max)]);
    est.push(vec!["converged".into(), result.converged.to_string()]);
    est.write(&c.out)?;

    let mut curve = CsvTable::new(&["y", "f_hat"]);
    if let Some(curves) = &result.curves {
        for y in curves.support().nodes() {
            if let Ok(v) = curves.f_hat(y) {
                curve.push(vec![fmt_sig(y), fmt_sig(v)]);
            }
        }
    }
    let curve_out = curve_path(&c.out);
    curve.write(&curve_out)?;

    for out in [&c.out, &curve_out] {
        let mut echo = ConfigEcho::new("fit", &cfg);
        echo.n = data.len();
        echo.replications = 1;
        let mut m = RunManifest::new("fit", out, vec![echo]);
        m.command = format!("fit --input {}", input_path.display());
        finish_manifest(m, c, start, out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Table1(c) => table(1, c),
        Command::Table2(c) => table(2, c),
        Command::Table3(c) => table(3, c),
        Command::Table4(c) => table(4, c),
        Command::Table5(c) => table(5, c),
        Command::Figure1(c) => figure_cmd(1, c),
        Command::Figure2(c) => figure_cmd(2, c),
        Command::Figure3(c) => figure_cmd(3, c),
        Command::Fit { common, input } => fit_cmd(common, input),
        Command::Custom(c) => custom(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Estimation(msg)) => {
            eprintln!("estimation failed: {msg}");
            ExitCode::from(2)
        }
    }
}
