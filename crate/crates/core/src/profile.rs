//! Profile log-likelihood for `β` with the base measure profiled out.
//!
//! ```text
//! l̂(β) = Σᵢ [ βᵀXᵢ·Yᵢ − b(βᵀXᵢ, f*_β) + log f*_β(Yᵢ) ]
//! ```
//!
//! with `f*_β(Yᵢ)` the leave-one-out curve at `Yᵢ`. The log-partition term
//! is either the quadrature `log ∫ exp(θy) f*_β(y) dy` of the full-sample
//! curve ([`BPath::Quadrature`], the default) or the cumulative index
//! integral `∫₀^θ m̂` ([`BPath::IndexIntegral`]).
//!
//! Everything that depends only on the responses (kernel matrices in `y`,
//! quadrature nodes, leave-one-out density estimates) is computed once in
//! [`ProfileObjective::new`]; an evaluation at a new `β` then costs one
//! index integral plus `O(n² + n·G)` exponentials.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{bandwidth_rule, nw_density, KernelFamily, KernelSpec, DENOMINATOR_FLOOR};
use crate::lfc::LfcEvaluator;
use crate::math::{exp, ln, log_sum_exp_slice};
use crate::model::Dataset;
use crate::optim::{maximize, SearchConfig};
use crate::quad::Grid;
use crate::{Error, Result};

/// Default node count of the support grid. The integrands are smooth on the
/// bandwidth scale, so the trapezoid rule has long converged at this size.
pub const PROFILE_QUAD_POINTS: usize = 401;

/// How `b(βᵀXᵢ, f*_β)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BPath {
    /// `log ∫ exp(θy) f*_β(y) dy` on the support grid.
    #[default]
    Quadrature,
    /// `∫₀^θ m̂(t) dt`, the cached denominators of the curve.
    IndexIntegral,
}

/// Which curve enters the likelihood as `f*_β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FStar {
    /// The raw least-favorable curve `f̃_β`.
    #[default]
    Tilde,
    /// `f̂_β`, the curve divided by its Monte Carlo normalizer.
    Hat,
}

/// Smoothing and evaluation choices for [`ProfileObjective`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileConfig {
    pub family: KernelFamily,
    /// Bandwidth for the index regression; `None` applies the rule of thumb
    /// to `βᵀXᵢ` at every `β`.
    pub index_bandwidth: Option<f64>,
    /// Bandwidth in `y`; `None` applies the rule of thumb to the responses.
    pub y_bandwidth: Option<f64>,
    pub b_path: BPath,
    pub f_star: FStar,
    /// Renormalize leave-one-out kernel weights over `i ≠ k`.
    pub renormalize_loo: bool,
    /// Nodes of the support grid used for `b` and for integrals of the curve.
    pub quad_points: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            index_bandwidth: None,
            y_bandwidth: None,
            b_path: BPath::Quadrature,
            f_star: FStar::Tilde,
            renormalize_loo: true,
            quad_points: PROFILE_QUAD_POINTS,
        }
    }
}

/// Support grid `[min Y − 3h, max Y + 3h]` of the curve estimate.
pub(crate) fn support_grid(ys: &[f64], h: f64, points: usize) -> Result<Grid> {
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Grid::new(lo - 3.0 * h, hi + 3.0 * h, points)
}

/// Response-only quantities shared by every `β`.
#[derive(Debug, Clone)]
pub(crate) struct ResponseCache {
    ys: Vec<f64>,
    kernel: KernelSpec,
    grid: Grid,
    nodes: Vec<f64>,
    log_w: Vec<f64>,
    /// `log K_h(Yᵢ − y_g)`, row `g`.
    lk_grid: Vec<f64>,
    lden_grid: Vec<f64>,
    /// `log K_h(Yᵢ − Y_k)`, row `k`.
    lk_pair: Vec<f64>,
    lden_loo: Vec<f64>,
    lden_all: Vec<f64>,
    /// Leave-one-out density estimate at each response; `-∞` below the floor.
    log_p_loo: Vec<f64>,
}

impl ResponseCache {
    pub(crate) fn new(ys: Vec<f64>, kernel: KernelSpec, points: usize) -> Result<Self> {
        let n = ys.len();
        if n < 3 {
            return Err(Error::invalid("profile likelihood needs n >= 3"));
        }
        let grid = support_grid(&ys, kernel.bandwidth(), points)?;
        let nodes: Vec<f64> = grid.nodes().collect();
        let log_w: Vec<f64> = (0..grid.points()).map(|g| ln(grid.weight(g))).collect();
        let mut lk_grid = Vec::with_capacity(nodes.len() * n);
        let mut lden_grid = Vec::with_capacity(nodes.len());
        for &y in &nodes {
            let start = lk_grid.len();
            lk_grid.extend(ys.iter().map(|yi| kernel.log_eval(yi - y)));
            lden_grid.push(log_sum_exp_slice(&lk_grid[start..]));
        }
        let mut lk_pair = Vec::with_capacity(n * n);
        let mut lden_loo = Vec::with_capacity(n);
        let mut lden_all = Vec::with_capacity(n);
        let mut log_p_loo = Vec::with_capacity(n);
        for k in 0..n {
            let start = lk_pair.len();
            lk_pair.extend(ys.iter().map(|yi| kernel.log_eval(yi - ys[k])));
            let row = &lk_pair[start..];
            lden_all.push(log_sum_exp_slice(row));
            let mut others: Vec<f64> = row.to_vec();
            others[k] = f64::NEG_INFINITY;
            lden_loo.push(log_sum_exp_slice(&others));
            let p = nw_density(&ys, &kernel, ys[k], Some(k)).unwrap_or(0.0);
            log_p_loo.push(if p < DENOMINATOR_FLOOR { f64::NEG_INFINITY } else { ln(p) });
        }
        Ok(Self { ys, kernel, grid, nodes, log_w, lk_grid, lden_grid, lk_pair, lden_loo, lden_all, log_p_loo })
    }

    pub(crate) fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub(crate) fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub(crate) fn grid(&self) -> &Grid {
        &self.grid
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `log f̃_β(Y_k)` leave-one-out for every `k`.
    pub(crate) fn log_lfc_loo(
        &self,
        theta: &[f64],
        log_den: &[f64],
        renormalize: bool,
    ) -> Result<Vec<f64>> {
        let den = if renormalize { &self.lden_loo } else { &self.lden_all };
        self.log_lfc_at_data(theta, log_den, den, true)
    }

    /// `log f̃_β(Y_k)` with the full sample for every `k`.
    pub(crate) fn log_lfc_data(&self, theta: &[f64], log_den: &[f64]) -> Result<Vec<f64>> {
        self.log_lfc_at_data(theta, log_den, &self.lden_all, false)
    }

    fn log_lfc_at_data(
        &self,
        theta: &[f64],
        log_den: &[f64],
        weight_den: &[f64],
        exclude: bool,
    ) -> Result<Vec<f64>> {
        let n = self.ys.len();
        let mut buf = vec![0.0; n];
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let yk = self.ys[k];
            let row = &self.lk_pair[k * n..(k + 1) * n];
            for i in 0..n {
                buf[i] = theta[i] * yk - log_den[i] + row[i];
            }
            if exclude {
                buf[k] = f64::NEG_INFINITY;
            }
            let den = weight_den[k];
            if den < ln(DENOMINATOR_FLOOR) {
                return Err(Error::IsolatedY(yk));
            }
            let v = den - log_sum_exp_slice(&buf);
            if !v.is_finite() {
                return Err(Error::LfcOverflow(yk));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// `log f̃_β` at the grid nodes; `-∞` where no kernel weight reaches.
    pub(crate) fn log_lfc_grid(&self, theta: &[f64], log_den: &[f64]) -> Vec<f64> {
        let n = self.ys.len();
        let mut buf = vec![0.0; n];
        self.nodes
            .iter()
            .enumerate()
            .map(|(g, &y)| {
                let den = self.lden_grid[g];
                if den == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let row = &self.lk_grid[g * n..(g + 1) * n];
                for i in 0..n {
                    buf[i] = theta[i] * y - log_den[i] + row[i];
                }
                let v = den - log_sum_exp_slice(&buf);
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect()
    }

    /// `log ∫ exp(θy + c(y)) dy` from log-values `c` at the nodes.
    pub(crate) fn log_integral_tilted(&self, theta: f64, log_values: &[f64], buf: &mut [f64]) -> f64 {
        for (g, b) in buf.iter_mut().enumerate() {
            *b = self.log_w[g] + theta * self.nodes[g] + log_values[g];
        }
        log_sum_exp_slice(buf)
    }

    /// `log` of `(1/n) Σ_k f̃(Y_k) / p̂₋ₖ(Y_k)` from full-sample log-values.
    pub(crate) fn log_normalizer(&self, log_f: &[f64]) -> Result<f64> {
        let mut terms = Vec::with_capacity(log_f.len());
        for (k, (lf, lp)) in log_f.iter().zip(&self.log_p_loo).enumerate() {
            if *lp == f64::NEG_INFINITY {
                return Err(Error::DensityFloor(k));
            }
            terms.push(lf - lp);
        }
        Ok(log_sum_exp_slice(&terms) - ln(log_f.len() as f64))
    }
}

/// Index bandwidth at `β`: the configured value, or the rule of thumb on the
/// index with a unit fallback when the index is constant.
pub(crate) fn index_kernel(config: &ProfileConfig, index: &[f64]) -> Result<KernelSpec> {
    let h = match config.index_bandwidth {
        Some(h) => h,
        None => bandwidth_rule(index).unwrap_or(1.0),
    };
    KernelSpec::new(config.family, h)
}

pub(crate) fn y_kernel(config: &ProfileConfig, ys: &[f64]) -> Result<KernelSpec> {
    let h = match config.y_bandwidth {
        Some(h) => h,
        None => bandwidth_rule(ys)?,
    };
    KernelSpec::new(config.family, h)
}

/// The profile log-likelihood `β ↦ l̂(β)` on a fixed sample.
#[derive(Debug, Clone)]
pub struct ProfileObjective {
    data: Dataset,
    config: ProfileConfig,
    pub(crate) cache: ResponseCache,
}

impl ProfileObjective {
    pub fn new(data: Dataset, config: ProfileConfig) -> Result<Self> {
        let ys = data.ys();
        let kernel = y_kernel(&config, &ys)?;
        let cache = ResponseCache::new(ys, kernel, config.quad_points)?;
        Ok(Self { data, config, cache })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn config(&self) -> &ProfileConfig {
        &self.config
    }

    pub fn y_kernel(&self) -> KernelSpec {
        self.cache.kernel()
    }

    /// Support grid of the curve estimates.
    pub fn support(&self) -> &Grid {
        self.cache.grid()
    }

    pub fn index_kernel(&self, beta: &[f64]) -> Result<KernelSpec> {
        index_kernel(&self.config, &self.data.index(beta)?)
    }

    /// The curve estimator at `β` with this objective's kernels.
    pub fn evaluator(&self, beta: &[f64]) -> Result<LfcEvaluator> {
        let ik = self.index_kernel(beta)?;
        Ok(LfcEvaluator::new(beta, &self.data, ik, self.cache.kernel())?
            .renormalized(self.config.renormalize_loo))
    }

    /// `l̂(β)`; `-∞` when the curve overflows.
    pub fn loglik(&self, beta: &[f64]) -> Result<f64> {
        match self.loglik_inner(beta) {
            Err(Error::LfcOverflow(_)) => Ok(f64::NEG_INFINITY),
            other => other,
        }
    }

    fn loglik_inner(&self, beta: &[f64]) -> Result<f64> {
        let lfc = self.evaluator(beta)?;
        let theta = lfc.index();
        let log_den = lfc.log_denominators();
        let loo = self.cache.log_lfc_loo(theta, log_den, self.config.renormalize_loo)?;
        let log_norm = match self.config.f_star {
            FStar::Tilde => 0.0,
            FStar::Hat => self.cache.log_normalizer(&self.cache.log_lfc_data(theta, log_den)?)?,
        };
        let grid_curve = match self.config.b_path {
            BPath::Quadrature => Some(self.cache.log_lfc_grid(theta, log_den)),
            BPath::IndexIntegral => None,
        };
        let mut buf = vec![0.0; self.cache.nodes().len()];
        let mut total = 0.0;
        for (i, (&t, &y)) in theta.iter().zip(self.cache.ys()).enumerate() {
            let b = match &grid_curve {
                Some(lf) => self.cache.log_integral_tilted(t, lf, &mut buf) - log_norm,
                None => log_den[i],
            };
            total += t * y - b + (loo[i] - log_norm);
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::LfcOverflow(f64::NAN))
        }
    }

    /// Final curve estimates `f̃_β` and `f̂_β`.
    pub fn estimate(&self, beta: &[f64]) -> Result<BaseMeasureEstimate> {
        let lfc = self.evaluator(beta)?;
        let log_f = self.cache.log_lfc_data(lfc.index(), lfc.log_denominators())?;
        let log_normalizer = self.cache.log_normalizer(&log_f)?;
        Ok(BaseMeasureEstimate { lfc, log_normalizer, support: self.cache.grid().clone() })
    }
}

/// `l̂(β)` for `objective`.
pub fn profile_loglik(objective: &ProfileObjective, beta: &[f64]) -> Result<f64> {
    objective.loglik(beta)
}

/// `f̃_β` and its standardized version `f̂_β = f̃_β / normalizer`.
#[derive(Debug, Clone)]
pub struct BaseMeasureEstimate {
    lfc: LfcEvaluator,
    log_normalizer: f64,
    support: Grid,
}

impl BaseMeasureEstimate {
    pub fn evaluator(&self) -> &LfcEvaluator {
        &self.lfc
    }

    pub fn normalizer(&self) -> f64 {
        exp(self.log_normalizer)
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn support(&self) -> &Grid {
        &self.support
    }

    pub fn f_tilde(&self, y: f64) -> Result<f64> {
        self.lfc.lfc_at(y, None)
    }

    pub fn f_hat(&self, y: f64) -> Result<f64> {
        Ok(exp(self.lfc.log_lfc_at(y, None)? - self.log_normalizer))
    }

    /// Trapezoid integral of `f̂` over the support grid; isolated nodes count
    /// as zero.
    pub fn f_hat_integral(&self) -> f64 {
        self.support.integrate_fn(|y| self.f_hat(y).unwrap_or(0.0))
    }
}

/// Output of [`fit`] and of the rank baseline.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub loglik_at_max: f64,
    /// Every evaluated `(β, objective)` pair.
    pub trace: Vec<(Vec<f64>, f64)>,
    pub converged: bool,
    /// Curve estimates at `β̂`; `None` for estimators without one.
    pub curves: Option<BaseMeasureEstimate>,
}

/// Maximizes the profile log-likelihood over the search box.
pub fn fit(objective: &ProfileObjective, search: &SearchConfig) -> Result<FitResult> {
    if search.dim() != objective.data.dim() {
        return Err(Error::Dimension { expected: objective.data.dim(), got: search.dim() });
    }
    let m = maximize(|b| objective.loglik(b).unwrap_or(f64::NEG_INFINITY), search)?;
    let curves = objective.estimate(&m.x)?;
    Ok(FitResult {
        beta_hat: m.x,
        loglik_at_max: m.value,
        trace: m.trace,
        converged: m.converged,
        curves: Some(curves),
    })
}
