//! The semiparametric exponential family density and its log-partition.
//!
//! For a base measure `f` and canonical parameter `θ`,
//! `b(θ, f) = log ∫ exp{θy} f(y) dy` and the conditional density of `y`
//! given `x` is `exp{βᵀx·y − b(βᵀx, f) + log f(y)}`. The partition is computed
//! by trapezoid quadrature on the measure's support with a max shift in log
//! space, so large `θ·y` does not overflow.
//!
//! [`score_mean_check`] and [`functional_derivative_check`] compute the two
//! score identities of the model. They serve as test oracles.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, exp, ln, sqrt, HALF_LN_2PI, PI};
use crate::quad::{Grid, DEFAULT_POINTS};
use crate::{Error, Result};

/// One draw of covariate, response and observed-flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y: f64,
    /// `true` when the pair was observed.
    pub delta: bool,
}

impl Observation {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y, delta: true }
    }

    pub fn with_delta(mut self, delta: bool) -> Self {
        self.delta = delta;
        self
    }
}

/// Ordered observations sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    d: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::invalid("a dataset needs at least 2 observations"));
        }
        let d = observations[0].x.len();
        if d == 0 {
            return Err(Error::invalid("covariate dimension must be at least 1"));
        }
        for (i, o) in observations.iter().enumerate() {
            if o.x.len() != d {
                return Err(Error::Dimension { expected: d, got: o.x.len() });
            }
            if !o.y.is_finite() || o.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(alloc::format!("observation {i} is not finite")));
            }
        }
        Ok(Self { observations, d })
    }

    /// Builds a dataset from parallel covariate rows and responses, all observed.
    pub fn from_rows(xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension { expected: xs.len(), got: ys.len() });
        }
        Self::new(xs.iter().zip(ys).map(|(x, &y)| Observation::new(x.clone(), y)).collect())
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalar(xs: &[f64], ys: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Self::from_rows(&rows, ys)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn observations_mut(&mut self) -> &mut [Observation] {
        &mut self.observations
    }

    pub fn ys(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    /// The linear index `βᵀxᵢ` for every observation.
    pub fn index(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        Ok(self.observations.iter().map(|o| dot(beta, &o.x)).collect())
    }

    pub fn observed_count(&self) -> usize {
        self.observations.iter().filter(|o| o.delta).count()
    }

    /// The subsample with `delta = 1`, in original order.
    pub fn observed(&self) -> Result<Dataset> {
        let kept: Vec<Observation> =
            self.observations.iter().filter(|o| o.delta).cloned().collect();
        if kept.is_empty() {
            return Err(Error::AllMissing);
        }
        Dataset::new(kept)
    }

    pub(crate) fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: beta.len() });
        }
        Ok(())
    }
}

/// A nonnegative base measure with a bounded integration support.
pub trait BaseMeasure {
    fn density(&self, y: f64) -> f64;

    /// Interval `[lo, hi]` carrying (numerically) all of the mass.
    fn support(&self) -> (f64, f64);

    fn log_density(&self, y: f64) -> f64 {
        ln(self.density(y))
    }
}

impl<T: BaseMeasure + ?Sized> BaseMeasure for &T {
    fn density(&self, y: f64) -> f64 {
        (**self).density(y)
    }
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn log_density(&self, y: f64) -> f64 {
        (**self).log_density(y)
    }
}

/// Standard normal density, integrated over `[-8, 8]` unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardNormal {
    pub lo: f64,
    pub hi: f64,
}

impl Default for StandardNormal {
    fn default() -> Self {
        Self { lo: -8.0, hi: 8.0 }
    }
}

impl BaseMeasure for StandardNormal {
    fn density(&self, y: f64) -> f64 {
        exp(self.log_density(y))
    }
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
    fn log_density(&self, y: f64) -> f64 {
        -0.5 * y * y - HALF_LN_2PI
    }
}

/// Uniform density on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub lo: f64,
    pub hi: f64,
}

impl BaseMeasure for Uniform {
    fn density(&self, y: f64) -> f64 {
        if y >= self.lo && y <= self.hi {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Base measure given by a closure over an explicit support.
#[derive(Debug, Clone, Copy)]
pub struct FnMeasure<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64> FnMeasure<F> {
    pub fn new(f: F, lo: f64, hi: f64) -> Self {
        Self { f, lo, hi }
    }
}

impl<F: Fn(f64) -> f64> BaseMeasure for FnMeasure<F> {
    fn density(&self, y: f64) -> f64 {
        (self.f)(y)
    }
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

fn support_grid(f: &impl BaseMeasure) -> Result<Grid> {
    let (lo, hi) = f.support();
    Grid::new(lo, hi, DEFAULT_POINTS)
}

/// `b(θ, f) = log ∫ exp{θy} f(y) dy` on the default 2001-point grid.
pub fn log_partition(theta: f64, f: &impl BaseMeasure) -> Result<f64> {
    log_partition_on(theta, f, &support_grid(f)?)
}

/// [`log_partition`] on a caller-chosen grid.
pub fn log_partition_on(theta: f64, f: &impl BaseMeasure, grid: &Grid) -> Result<f64> {
    let logs: Vec<f64> = grid.nodes().map(|y| theta * y + f.log_density(y)).collect();
    let b = grid.log_integrate_exp(&logs);
    if !b.is_finite() {
        return Err(Error::LogPartitionOverflow(theta));
    }
    Ok(b)
}

/// `b′(θ, f)` by central difference with step `1e-5·max(1, |θ|)`.
pub fn log_partition_slope(theta: f64, f: &impl BaseMeasure) -> Result<f64> {
    let grid = support_grid(f)?;
    let eps = 1e-5 * theta.abs().max(1.0);
    let up = log_partition_on(theta + eps, f, &grid)?;
    let down = log_partition_on(theta - eps, f, &grid)?;
    Ok((up - down) / (2.0 * eps))
}

/// `βᵀx·y − b(βᵀx, f) + log f(y)`.
pub fn log_density(beta: &[f64], f: &impl BaseMeasure, obs: &Observation) -> Result<f64> {
    if beta.len() != obs.x.len() {
        return Err(Error::Dimension { expected: obs.x.len(), got: beta.len() });
    }
    if f.density(obs.y) <= 0.0 {
        return Err(Error::ZeroBaseMeasure(obs.y));
    }
    let theta = dot(beta, &obs.x);
    Ok(theta * obs.y - log_partition(theta, f)? + f.log_density(obs.y))
}

/// Sample mean of the `β`-score `x·(y − b′(βᵀx, f))` over `draws`.
pub fn score_mean_check(beta: &[f64], f: &impl BaseMeasure, draws: &Dataset) -> Result<Vec<f64>> {
    draws.check_beta(beta)?;
    let mut mean = vec![0.0; draws.dim()];
    for o in draws.observations() {
        let resid = o.y - log_partition_slope(dot(beta, &o.x), f)?;
        for (m, x) in mean.iter_mut().zip(&o.x) {
            *m += x * resid;
        }
    }
    let n = draws.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// The functional derivative of the log-likelihood in `f` at `y`:
/// `−exp{βᵀx·y} / ∫exp{βᵀx·t} f(t) dt + 1/f(y)`.
pub fn functional_derivative_check(
    beta: &[f64],
    f: &impl BaseMeasure,
    x: &[f64],
    y: f64,
) -> Result<f64> {
    if beta.len() != x.len() {
        return Err(Error::Dimension { expected: x.len(), got: beta.len() });
    }
    let fy = f.density(y);
    if fy <= 0.0 {
        return Err(Error::ZeroBaseMeasure(y));
    }
    let theta = dot(beta, x);
    Ok(-exp(theta * y - log_partition(theta, f)?) + 1.0 / fy)
}

/// Standard normal density value.
pub fn normal_pdf(z: f64) -> f64 {
    exp(-0.5 * z * z) / sqrt(2.0 * PI)
}
