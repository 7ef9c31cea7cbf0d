//! Data generators for the three simulation designs, the replication engine
//! and summary statistics.
//!
//! Every replication draws from its own ChaCha8 stream: the master seed
//! fixes the key and the replication index selects the stream, so a
//! replication's data never depends on which worker ran it or on what ran
//! before. Results are collected in replication order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use spef_core::{
    apply_missingness, fit, fit_observed, rank_fit, rank_loglik, Dataset, FitResult,
    MechanismKind, MissingMechanism, Observation, ProfileConfig, ProfileObjective, RankObjective,
    SearchConfig,
};

use crate::{Error, Result};

/// Fewer observed rows than this fail the replication.
pub const MIN_OBSERVED: usize = 10;

/// Simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// `Y = βX + ε`, `X ~ N(μ, 1)`.
    Exp1,
    /// `Y = βᵀX + ε`, `X ~ N(0, Σ)` with `σᵢⱼ = 0.1^|i−j|`.
    Exp2,
    /// Design 1 followed by a response-dependent deletion mechanism.
    Exp3,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exp1" => Ok(Experiment::Exp1),
            "exp2" => Ok(Experiment::Exp2),
            "exp3" => Ok(Experiment::Exp3),
            other => Err(format!("unknown experiment `{other}` (expected exp1, exp2 or exp3)")),
        }
    }
}

/// One simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub replications: usize,
    pub beta_true: Vec<f64>,
    /// Mean of the covariate in designs 1 and 3.
    pub mu: f64,
    pub sigma2: f64,
    /// Deletion mechanism for design 3; `None` keeps every row.
    pub mechanism: Option<MechanismKind>,
    pub c: f64,
    pub profile: ProfileConfig,
    /// Per-coordinate search interval for the profile estimators.
    pub profile_box: (f64, f64),
    /// Per-coordinate search interval for the rank baseline.
    pub rank_box: (f64, f64),
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Defaults of the given design: `β = 2` (or `(1, 2, 3)`), `n = 100`,
    /// 100 replications.
    pub fn new(experiment: Experiment) -> Self {
        let (beta_true, mu, sigma2, mechanism, c) = match experiment {
            Experiment::Exp1 => (vec![2.0], 1.0, 1.0, None, 1.0),
            Experiment::Exp2 => (vec![1.0, 2.0, 3.0], 0.0, 1.0, None, 1.0),
            Experiment::Exp3 => {
                (vec![2.0], 2.0, 1.1, Some(MechanismKind::NondecomposableLine), 0.9)
            }
        };
        Self {
            experiment,
            n: 100,
            replications: 100,
            beta_true,
            mu,
            sigma2,
            mechanism,
            c,
            profile: ProfileConfig::default(),
            profile_box: (-10.0, 10.0),
            rank_box: (-250.0, 250.0),
            master_seed: 20_240_601,
        }
    }

    pub fn dim(&self) -> usize {
        self.beta_true.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Experiment(m));
        if self.n < 10 {
            return bad(format!("n = {} is below 10", self.n));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 = {} must be positive", self.sigma2));
        }
        if self.beta_true.is_empty() || self.beta_true.iter().any(|b| !b.is_finite()) {
            return bad("beta_true must be a nonempty list of finite values".into());
        }
        if self.experiment != Experiment::Exp2 && self.dim() != 1 {
            return bad(format!("{} is univariate, beta_true has {} entries", self.experiment.name(), self.dim()));
        }
        if !self.mu.is_finite() {
            return bad("mu must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.c) {
            return bad(format!("c = {} outside [0, 1]", self.c));
        }
        for (name, (lo, hi)) in [("profile", self.profile_box), ("rank", self.rank_box)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("{name} search box [{lo}, {hi}] is empty"));
            }
        }
        Ok(())
    }

    fn mechanism(&self) -> Result<Option<MissingMechanism>> {
        match (self.experiment, self.mechanism) {
            (Experiment::Exp3, Some(kind)) => Ok(Some(MissingMechanism::new(kind, self.c)?)),
            _ => Ok(None),
        }
    }

    pub fn profile_search(&self) -> SearchConfig {
        SearchConfig::boxed(self.dim(), self.profile_box.0, self.profile_box.1)
    }

    pub fn rank_search(&self) -> SearchConfig {
        SearchConfig::boxed(self.dim(), self.rank_box.0, self.rank_box.1)
    }

    /// Estimators fitted in every replication.
    pub fn estimators(&self) -> &'static [Estimator] {
        match self.experiment {
            Experiment::Exp3 => &[Estimator::Profile, Estimator::Rank, Estimator::Outcome],
            _ => &[Estimator::Profile, Estimator::Rank],
        }
    }
}

/// The ChaCha8 stream of one replication.
pub fn replication_rng(master_seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication as u64);
    rng
}

/// Lower-triangular `L` with `LLᵀ = Σ`, `σᵢⱼ = ρ^|i−j|`.
pub fn ar1_cholesky(d: usize, rho: f64) -> Vec<Vec<f64>> {
    let sigma = |i: usize, j: usize| rho.powi((i as i32 - j as i32).abs());
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (sigma(i, i) - s).sqrt();
            } else {
                l[i][j] = (sigma(i, j) - s) / l[j][j];
            }
        }
    }
    l
}

/// The dataset of one replication. Design 3 rows carry their `δ`; fewer
/// than [`MIN_OBSERVED`] observed rows is an error.
pub fn generate(config: &ExperimentConfig, replication: usize) -> Result<Dataset> {
    config.validate()?;
    let mut rng = replication_rng(config.master_seed, replication);
    let noise = Normal::new(0.0, config.sigma2.sqrt()).map_err(|e| Error::Experiment(e.to_string()))?;
    let d = config.dim();
    let chol = (config.experiment == Experiment::Exp2).then(|| ar1_cholesky(d, 0.1));
    let mut rows = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let x: Vec<f64> = match &chol {
            Some(l) => {
                let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                l.iter().map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum()).collect()
            }
            None => {
                let z: f64 = StandardNormal.sample(&mut rng);
                vec![config.mu + z]
            }
        };
        let mean: f64 = x.iter().zip(&config.beta_true).map(|(a, b)| a * b).sum();
        let y = mean + noise.sample(&mut rng);
        rows.push(Observation::new(x, y));
    }
    let data = Dataset::new(rows)?;
    match config.mechanism()? {
        Some(mech) => {
            let out = apply_missingness(&data, &mech, &mut rng)?;
            let kept = out.observed_count();
            if kept < MIN_OBSERVED {
                return Err(Error::Experiment(format!(
                    "replication {replication}: only {kept} observed rows"
                )));
            }
            Ok(out)
        }
        None => Ok(data),
    }
}

/// Estimators compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Profile likelihood on the observed rows.
    Profile,
    /// Pairwise rank surrogate.
    Rank,
    /// Outcome-regression fit of the observed-data likelihood.
    Outcome,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Profile => "profile",
            Estimator::Rank => "rank",
            Estimator::Outcome => "outcome",
        }
    }
}

/// Profile fit on the observed rows of `data`.
pub fn fit_profile(config: &ExperimentConfig, data: &Dataset) -> Result<FitResult> {
    let obj = ProfileObjective::new(data.observed()?, config.profile)?;
    Ok(fit(&obj, &config.profile_search())?)
}

fn fit_one(config: &ExperimentConfig, data: &Dataset, est: Estimator) -> Result<Vec<f64>> {
    match est {
        Estimator::Profile => Ok(fit_profile(config, data)?.beta_hat),
        Estimator::Rank => {
            let obj = RankObjective::new(data)?;
            Ok(rank_fit(&obj, &config.rank_search())?.beta_hat)
        }
        Estimator::Outcome => {
            Ok(fit_observed(data, &config.profile, &config.profile_search())?.beta_o)
        }
    }
}

/// Estimates of one replication, one entry per estimator in
/// [`ExperimentConfig::estimators`] order.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: usize,
    pub estimates: Vec<(Estimator, std::result::Result<Vec<f64>, String>)>,
}

/// Generates and fits one replication. Generation failures fail every
/// estimator of the replication.
pub fn run_replication(config: &ExperimentConfig, index: usize) -> Replication {
    let estimates = match generate(config, index) {
        Ok(data) => config
            .estimators()
            .iter()
            .map(|&e| (e, fit_one(config, &data, e).map_err(|err| err.to_string())))
            .collect(),
        Err(err) => {
            let msg = err.to_string();
            config.estimators().iter().map(|&e| (e, Err(msg.clone()))).collect()
        }
    };
    Replication { index, estimates }
}

/// Summary of one coordinate of one estimator across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub estimator: Estimator,
    /// Zero-based coordinate of `β`.
    pub component: usize,
    pub truth: f64,
    pub mean: f64,
    pub median: f64,
    pub mse: f64,
    /// `mean − truth`.
    pub bias: f64,
    /// Sample standard deviation with divisor `r − 1`; zero for one value.
    pub sd: f64,
    pub replications_used: usize,
    pub failures: usize,
}

/// Median of the values; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// The five statistics of `values` around `truth`. Empty input gives `NaN`
/// statistics.
pub fn summarize(
    estimator: Estimator,
    component: usize,
    truth: f64,
    values: &[f64],
    failures: usize,
) -> SimSummary {
    let r = values.len();
    let mean = values.iter().sum::<f64>() / r as f64;
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / r as f64;
    let sd = match r {
        0 => f64::NAN,
        1 => 0.0,
        _ => (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1) as f64).sqrt(),
    };
    SimSummary {
        estimator,
        component,
        truth,
        mean,
        median: median(values),
        mse,
        bias: mean - truth,
        sd,
        replications_used: r,
        failures,
    }
}

/// All replications of a configuration and their summaries.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub replications: Vec<Replication>,
    pub summaries: Vec<SimSummary>,
}

impl ExperimentRun {
    /// Failed fits per estimator.
    pub fn failures(&self, est: Estimator) -> usize {
        self.replications
            .iter()
            .flat_map(|r| &r.estimates)
            .filter(|(e, res)| *e == est && res.is_err())
            .count()
    }

    /// `true` when at least one fit of any estimator succeeded.
    pub fn any_success(&self) -> bool {
        self.replications.iter().flat_map(|r| &r.estimates).any(|(_, res)| res.is_ok())
    }

    pub fn summary(&self, est: Estimator, component: usize) -> Option<&SimSummary> {
        self.summaries.iter().find(|s| s.estimator == est && s.component == component)
    }
}

/// Runs every replication on the current rayon pool and summarizes each
/// estimator coordinate by coordinate. Failed fits are excluded and counted.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let replications: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|k| run_replication(config, k))
        .collect();
    let mut summaries = Vec::new();
    for (slot, &est) in config.estimators().iter().enumerate() {
        let ok: Vec<&Vec<f64>> =
            replications.iter().filter_map(|r| r.estimates[slot].1.as_ref().ok()).collect();
        let failures = replications.len() - ok.len();
        for (j, &truth) in config.beta_true.iter().enumerate() {
            let values: Vec<f64> = ok.iter().map(|b| b[j]).collect();
            summaries.push(summarize(est, j, truth, &values, failures));
        }
    }
    Ok(ExperimentRun { replications, summaries })
}

/// One point of a median curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    /// `None` when no replication produced a value here.
    pub median: Option<f64>,
    /// Replications that contributed.
    pub used: usize,
}

fn median_points(grid: &[f64], columns: Vec<Vec<f64>>) -> Vec<CurvePoint> {
    grid.iter()
        .zip(columns)
        .map(|(&x, vals)| CurvePoint {
            x,
            median: (!vals.is_empty()).then(|| median(&vals)),
            used: vals.len(),
        })
        .collect()
}

/// Across-replication median of the standardized base-measure estimate
/// `f̂` at `β̂`. Grid points where a replication's curve is undefined (for
/// instance an isolated `y`) are skipped for that replication.
pub fn f_curve_median(config: &ExperimentConfig, y_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    if y_grid.is_empty() {
        return Err(Error::Experiment("empty y grid".into()));
    }
    let per_rep: Vec<Option<Vec<Option<f64>>>> = (0..config.replications)
        .into_par_iter()
        .map(|k| {
            let data = generate(config, k).ok()?;
            let curves = fit_profile(config, &data).ok()?.curves?;
            Some(y_grid.iter().map(|&y| curves.f_hat(y).ok()).collect())
        })
        .collect();
    let mut columns = vec![Vec::new(); y_grid.len()];
    for vals in per_rep.iter().flatten() {
        for (col, v) in columns.iter_mut().zip(vals) {
            if let Some(v) = v {
                col.push(*v);
            }
        }
    }
    Ok(median_points(y_grid, columns))
}

/// Across-replication median of the rank surrogate along `β` for a
/// univariate design.
pub fn median_curve(config: &ExperimentConfig, beta_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    config.validate()?;
    if beta_grid.is_empty() {
        return Err(Error::Experiment("empty beta grid".into()));
    }
    if config.dim() != 1 {
        return Err(Error::Experiment("the rank curve is drawn for univariate designs".into()));
    }
    let per_rep: Vec<Option<Vec<f64>>> = (0..config.replications)
        .into_par_iter()
        .map(|k| {
            let obj = RankObjective::new(&generate(config, k).ok()?).ok()?;
            beta_grid.iter().map(|&b| rank_loglik(&obj, &[b]).ok()).collect()
        })
        .collect();
    let mut columns = vec![Vec::new(); beta_grid.len()];
    for vals in per_rep.iter().flatten() {
        for (col, v) in columns.iter_mut().zip(vals) {
            col.push(*v);
        }
    }
    Ok(median_points(beta_grid, columns))
}

/// `lo, lo + step, …` up to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| lo + k as f64 * step).collect()
}
