//! Outcome regression with responses missing not at random.
//!
//! Under a Gaussian working model `Y | X ~ N(βᵀX, 1)`, the observed-data
//! density of a response is `φ(y − θ)·g₁(y) / exp G(θ, g₁)` with
//!
//! ```text
//! G(θ, g₁) = log ∫ φ(y − θ) g₁(y) dy,
//! ```
//!
//! and `g₁` is recovered from the observed-subset curve `f̃ᵐ` as
//! `g̃₁(y) = √(2π)·f̃ᵐ(y)·exp(y²/2)`. The selection shift
//! `g(θ, g₁) = ∫(y − θ)φ(y − θ)g₁(y)dy / ∫φ(y − θ)g₁(y)dy` corrects the
//! linear predictor.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::kernel::KernelSpec;
use crate::lfc::LfcEvaluator;
use crate::math::{exp, ln, log_sum_exp_slice, sqrt, HALF_LN_2PI, PI};
use crate::model::{normal_pdf, Dataset};
use crate::optim::{maximize, SearchConfig};
use crate::profile::{FitResult, ProfileConfig, ProfileObjective};
use crate::quad::Grid;
use crate::{Error, Result};

/// `exp(y²/2)` overflows past this `|y|`.
pub const G1_LIMIT: f64 = 38.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    /// `P(δ = 1 | x, y) = c·I{x₁ > 0}·I{y > 0}`.
    DecomposableIndicator,
    /// `P(δ = 1 | x, y) = c·I{1.8·x₁ < y}`.
    NondecomposableLine,
}

/// A response-dependent observation mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissingMechanism {
    kind: MechanismKind,
    c: f64,
}

impl MissingMechanism {
    pub fn new(kind: MechanismKind, c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::invalid(alloc::format!("observation probability {c} outside [0, 1]")));
        }
        Ok(Self { kind, c })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `P(δ = 1 | x, y)`; only the first covariate enters.
    pub fn observe_probability(&self, x: &[f64], y: f64) -> f64 {
        let x1 = x.first().copied().unwrap_or(0.0);
        let on = match self.kind {
            MechanismKind::DecomposableIndicator => x1 > 0.0 && y > 0.0,
            MechanismKind::NondecomposableLine => 1.8 * x1 < y,
        };
        if on {
            self.c
        } else {
            0.0
        }
    }
}

/// Draws `δᵢ` for every row. One uniform is consumed per row whatever the
/// probability, so the stream position depends only on `n`.
pub fn apply_missingness<R: Rng + ?Sized>(
    data: &Dataset,
    mech: &MissingMechanism,
    rng: &mut R,
) -> Result<Dataset> {
    let mut out = data.clone();
    for o in out.observations_mut() {
        let u: f64 = rng.random();
        o.delta = u < mech.observe_probability(&o.x, o.y);
    }
    if out.observed_count() == 0 {
        return Err(Error::AllMissing);
    }
    Ok(out)
}

/// The least-favorable curve built from the observed rows only.
pub fn lfc_observed(
    beta: &[f64],
    data: &Dataset,
    index_kernel: KernelSpec,
    y_kernel: KernelSpec,
) -> Result<LfcEvaluator> {
    let obs = data.observed()?;
    if obs.len() < 3 {
        return Err(Error::invalid("observed-subset curve needs at least 3 observed rows"));
    }
    LfcEvaluator::new(beta, &obs, index_kernel, y_kernel)
}

/// `g̃₁(y) = √(2π)·f_m(y)·exp(y²/2)`.
pub fn g1_recover(f_m: impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    if y.abs() > G1_LIMIT {
        return Err(Error::G1Overflow(y));
    }
    let f = f_m(y);
    if !f.is_finite() || f < 0.0 {
        return Err(Error::invalid("observed-subset density must be finite and nonnegative"));
    }
    Ok(sqrt(2.0 * PI) * f * exp(0.5 * y * y))
}

/// `G(θ, g₁) = log ∫ φ(y − θ) g₁(y) dy` on `grid`.
pub fn g_functional(theta: f64, g1: impl Fn(f64) -> f64, grid: &Grid) -> Result<f64> {
    let v = grid.integrate_fn(|y| normal_pdf(y - theta) * g1(y));
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::ZeroIntegral("G functional"));
    }
    Ok(ln(v))
}

/// The selection shift `g(θ, g₁)` on `grid`.
pub fn selection_shift(theta: f64, g1: impl Fn(f64) -> f64, grid: &Grid) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in grid.nodes().enumerate() {
        let w = grid.weight(i) * normal_pdf(y - theta) * g1(y);
        num += w * (y - theta);
        den += w;
    }
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::ZeroIntegral("selection shift"));
    }
    Ok(num / den)
}

/// `log g̃₁` at the support nodes from `log f̃ᵐ` there.
fn log_g1_nodes(nodes: &[f64], log_fm: &[f64]) -> Vec<f64> {
    nodes.iter().zip(log_fm).map(|(y, lf)| HALF_LN_2PI + lf + 0.5 * y * y).collect()
}

/// `G(θ, g̃₁)` from tabulated `log g̃₁`, in log space.
fn g_tabulated(theta: f64, grid: &Grid, nodes: &[f64], log_g1: &[f64], buf: &mut [f64]) -> f64 {
    for (g, b) in buf.iter_mut().enumerate() {
        let z = nodes[g] - theta;
        *b = ln(grid.weight(g)) - 0.5 * z * z - HALF_LN_2PI + log_g1[g];
    }
    log_sum_exp_slice(buf)
}

/// The observed-data log-likelihood
/// `β ↦ Σ_{i∈𝒪} [θᵢYᵢ − θᵢ²/2 − G(θᵢ, g̃₁β) + log f̃ᵐ_β(Yᵢ)]`.
#[derive(Debug, Clone)]
pub struct ObservedObjective {
    inner: ProfileObjective,
}

impl ObservedObjective {
    /// Restricts `data` to its observed rows; bandwidths follow `config`
    /// on that subset.
    pub fn new(data: &Dataset, config: ProfileConfig) -> Result<Self> {
        let obs = data.observed()?;
        Ok(Self { inner: ProfileObjective::new(obs, config)? })
    }

    /// The profile objective on the observed subset.
    pub fn profile(&self) -> &ProfileObjective {
        &self.inner
    }

    pub fn support(&self) -> &Grid {
        self.inner.support()
    }

    /// `log g̃₁β` at the support nodes.
    pub fn log_g1(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let lfc = self.inner.evaluator(beta)?;
        let cache = &self.inner.cache;
        let lf = cache.log_lfc_grid(lfc.index(), lfc.log_denominators());
        Ok(log_g1_nodes(cache.nodes(), &lf))
    }

    pub fn loglik(&self, beta: &[f64]) -> Result<f64> {
        let cache = &self.inner.cache;
        let lfc = self.inner.evaluator(beta)?;
        let theta = lfc.index();
        let log_den = lfc.log_denominators();
        let loo = match cache.log_lfc_loo(theta, log_den, self.inner.config().renormalize_loo) {
            Err(Error::LfcOverflow(_)) => return Ok(f64::NEG_INFINITY),
            other => other?,
        };
        let lf = cache.log_lfc_grid(theta, log_den);
        let log_g1 = log_g1_nodes(cache.nodes(), &lf);
        let mut buf = vec![0.0; cache.nodes().len()];
        let mut total = 0.0;
        for (i, (&t, &y)) in theta.iter().zip(cache.ys()).enumerate() {
            let g = g_tabulated(t, cache.grid(), cache.nodes(), &log_g1, &mut buf);
            total += t * y - 0.5 * t * t - g + loo[i];
        }
        Ok(if total.is_finite() { total } else { f64::NEG_INFINITY })
    }
}

/// `β̂_𝒪` together with the tabulated `g̃₁` at `β̂_𝒪`.
#[derive(Debug, Clone)]
pub struct OutcomeRegressionFit {
    pub beta_o: Vec<f64>,
    pub fit: FitResult,
    grid: Grid,
    nodes: Vec<f64>,
    log_g1: Vec<f64>,
}

impl OutcomeRegressionFit {
    pub fn support(&self) -> &Grid {
        &self.grid
    }

    /// `g̃₁` by linear interpolation between support nodes; zero outside.
    pub fn g1_tilde(&self, y: f64) -> f64 {
        let (lo, hi) = (self.grid.lo(), self.grid.hi());
        if !(lo..=hi).contains(&y) {
            return 0.0;
        }
        let s = (y - lo) / self.grid.step();
        let k = (s as usize).min(self.nodes.len() - 2);
        let t = s - k as f64;
        let a = exp(self.log_g1[k]);
        let b = exp(self.log_g1[k + 1]);
        (1.0 - t) * a + t * b
    }

    /// `β̂ᵀ_𝒪x + g(β̂ᵀ_𝒪x, g̃₁)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.beta_o.len() {
            return Err(Error::Dimension { expected: self.beta_o.len(), got: x.len() });
        }
        let theta: f64 = x.iter().zip(&self.beta_o).map(|(a, b)| a * b).sum();
        let mut logs = Vec::with_capacity(self.nodes.len());
        for (g, y) in self.nodes.iter().enumerate() {
            let z = y - theta;
            logs.push(ln(self.grid.weight(g)) - 0.5 * z * z + self.log_g1[g]);
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ZeroIntegral("selection shift"));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (l, y) in logs.iter().zip(&self.nodes) {
            let w = exp(l - max);
            num += w * (y - theta);
            den += w;
        }
        Ok(theta + num / den)
    }
}

/// Maximizes the observed-data log-likelihood and tabulates `g̃₁` at the
/// maximizer.
pub fn fit_observed(
    data: &Dataset,
    config: &ProfileConfig,
    search: &SearchConfig,
) -> Result<OutcomeRegressionFit> {
    let obj = ObservedObjective::new(data, *config)?;
    if search.dim() != data.dim() {
        return Err(Error::Dimension { expected: data.dim(), got: search.dim() });
    }
    let m = maximize(|b| obj.loglik(b).unwrap_or(f64::NEG_INFINITY), search)?;
    let curves = obj.inner.estimate(&m.x)?;
    let log_g1 = obj.log_g1(&m.x)?;
    Ok(OutcomeRegressionFit {
        beta_o: m.x.clone(),
        fit: FitResult {
            beta_hat: m.x,
            loglik_at_max: m.value,
            trace: m.trace,
            converged: m.converged,
            curves: Some(curves),
        },
        grid: obj.support().clone(),
        nodes: obj.inner.cache.nodes().to_vec(),
        log_g1,
    })
}
