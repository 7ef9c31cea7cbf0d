//! Explicit least-favorable-curve estimator of the base measure.
//!
//! For fixed `β` the curve is
//!
//! ```text
//! f̃_β(y) = [ Σᵢ exp{βᵀXᵢ·y − Bᵢ} · Wᵢ(y) ]⁻¹,   Bᵢ = ∫₀^{βᵀXᵢ} m̂(t) dt,
//! ```
//!
//! where `m̂` is the Nadaraya–Watson regression of `Y` on the index `βᵀX` and
//! `Wᵢ(y)` are kernel weights in `y`. The `exp{Bᵢ}` terms do not depend on
//! `y`, so [`LfcEvaluator`] computes them once per `β` and keeps them in log
//! form. All sums over `i` run through a log-sum-exp.

use alloc::vec::Vec;

use crate::kernel::{nw_density, nw_regress, KernelSpec, DENOMINATOR_FLOOR};
use crate::math::{exp, floor, ln, LogSumExp};
use crate::model::Dataset;
use crate::{Error, Result};

/// Default number of trapezoid intervals between 0 and the largest `|βᵀXᵢ|`.
pub const INDEX_STEPS: usize = 200;

/// A point farther than this many bandwidths from every response is isolated.
pub const ISOLATION_BANDWIDTHS: f64 = 3.0;

/// Cumulative integral `θ ↦ ∫₀^θ m̂(t) dt` of the index regression.
///
/// The trapezoid nodes sit at multiples of one shared step
/// `Δ = max|θⱼ| / steps`, plus the end point `θ` itself. Every query therefore
/// integrates over the same nodes, and `value(θ₂) − value(θ₁)` is the
/// trapezoid integral over `[θ₁, θ₂]` on that grid.
#[derive(Debug, Clone)]
pub struct IndexIntegral {
    index: Vec<f64>,
    ys: Vec<f64>,
    kernel: KernelSpec,
    step: f64,
    // m̂ at ±kΔ and the matching cumulative (unsigned) integrals from 0.
    m_pos: Vec<f64>,
    m_neg: Vec<f64>,
    cum_pos: Vec<f64>,
    cum_neg: Vec<f64>,
}

impl IndexIntegral {
    pub fn new(index: &[f64], ys: &[f64], kernel: KernelSpec) -> Result<Self> {
        Self::with_steps(index, ys, kernel, INDEX_STEPS)
    }

    pub fn with_steps(index: &[f64], ys: &[f64], kernel: KernelSpec, steps: usize) -> Result<Self> {
        if index.len() != ys.len() {
            return Err(Error::Dimension { expected: index.len(), got: ys.len() });
        }
        if index.len() < 2 {
            return Err(Error::invalid("index integral needs n >= 2"));
        }
        if steps == 0 {
            return Err(Error::invalid("index integral needs at least one step"));
        }
        let top = index.iter().cloned().fold(0.0f64, f64::max);
        let bottom = index.iter().cloned().fold(0.0f64, f64::min);
        let span = top.max(-bottom);
        let step = span / steps as f64;
        let mut this = Self {
            index: index.to_vec(),
            ys: ys.to_vec(),
            kernel,
            step,
            m_pos: Vec::new(),
            m_neg: Vec::new(),
            cum_pos: Vec::new(),
            cum_neg: Vec::new(),
        };
        if step > 0.0 {
            let m0 = this.regress(0.0)?;
            this.m_pos.push(m0);
            this.m_neg.push(m0);
            this.cum_pos.push(0.0);
            this.cum_neg.push(0.0);
            this.extend(true, nodes_needed(top, step))?;
            this.extend(false, nodes_needed(-bottom, step))?;
        }
        Ok(this)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `m̂(t)`, the index regression.
    pub fn regress(&self, t: f64) -> Result<f64> {
        nw_regress(&self.index, &self.ys, &self.kernel, t)
    }

    fn extend(&mut self, positive: bool, last: usize) -> Result<()> {
        let sign = if positive { 1.0 } else { -1.0 };
        loop {
            let have = if positive { self.m_pos.len() } else { self.m_neg.len() };
            if have > last {
                return Ok(());
            }
            let m = self.regress(sign * have as f64 * self.step)?;
            let (ms, cs) = if positive {
                (&mut self.m_pos, &mut self.cum_pos)
            } else {
                (&mut self.m_neg, &mut self.cum_neg)
            };
            let prev_m = ms[have - 1];
            let prev_c = cs[have - 1];
            ms.push(m);
            cs.push(prev_c + 0.5 * self.step * (prev_m + m));
        }
    }

    /// Oriented trapezoid value of `∫₀^θ m̂(t) dt`.
    pub fn value(&self, theta: f64) -> Result<f64> {
        if !theta.is_finite() {
            return Err(Error::invalid("index integral at a non-finite point"));
        }
        if theta == 0.0 {
            return Ok(0.0);
        }
        if self.step == 0.0 {
            // Every index is 0, so m̂ is flat at the response mean.
            return Ok(theta * self.regress(theta)?);
        }
        let positive = theta > 0.0;
        let a = theta.abs();
        let k = floor(a / self.step) as usize;
        let (ms, cs) = if positive { (&self.m_pos, &self.cum_pos) } else { (&self.m_neg, &self.cum_neg) };
        let (m_k, c_k) = if k < ms.len() {
            (ms[k], cs[k])
        } else {
            // Past the cached range: continue the same grid on the fly.
            let mut m_prev = *ms.last().unwrap_or(&0.0);
            let mut c = *cs.last().unwrap_or(&0.0);
            let sign = if positive { 1.0 } else { -1.0 };
            for j in ms.len()..=k {
                let m = self.regress(sign * j as f64 * self.step)?;
                c += 0.5 * self.step * (m_prev + m);
                m_prev = m;
            }
            (m_prev, c)
        };
        let rest = a - k as f64 * self.step;
        let total = if rest > 0.0 { c_k + 0.5 * rest * (m_k + self.regress(theta)?) } else { c_k };
        Ok(if positive { total } else { -total })
    }
}

fn nodes_needed(reach: f64, step: f64) -> usize {
    if reach <= 0.0 {
        0
    } else {
        // Round to absorb the last ulp so the extreme index lands on a node.
        let k = reach / step;
        let r = libm::round(k);
        if (k - r).abs() < 1e-9 {
            r as usize
        } else {
            floor(k) as usize
        }
    }
}

/// `∫₀^θ m̂(t) dt` with `m̂` the Nadaraya–Watson regression of `Y` on `βᵀX`.
pub fn cum_index_integral(
    beta: &[f64],
    data: &Dataset,
    index_kernel: KernelSpec,
    theta: f64,
) -> Result<f64> {
    let index = data.index(beta)?;
    IndexIntegral::new(&index, &data.ys(), index_kernel)?.value(theta)
}

/// The least-favorable-curve estimator for one `β`.
///
/// Construction evaluates the `n` cached log-denominators `Bᵢ`; afterwards the
/// evaluator is read-only.
#[derive(Debug, Clone)]
pub struct LfcEvaluator {
    beta: Vec<f64>,
    index: Vec<f64>,
    ys: Vec<f64>,
    log_den: Vec<f64>,
    y_kernel: KernelSpec,
    renormalize: bool,
}

impl LfcEvaluator {
    pub fn new(
        beta: &[f64],
        data: &Dataset,
        index_kernel: KernelSpec,
        y_kernel: KernelSpec,
    ) -> Result<Self> {
        let index = data.index(beta)?;
        let ys = data.ys();
        let integral = IndexIntegral::new(&index, &ys, index_kernel)?;
        let log_den = index.iter().map(|&t| integral.value(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { beta: beta.to_vec(), index, ys, log_den, y_kernel, renormalize: true })
    }

    /// Evaluator from precomputed parts: indices `βᵀXᵢ`, responses and
    /// `log` of the cached denominators.
    pub fn from_parts(
        index: Vec<f64>,
        ys: Vec<f64>,
        log_denominators: Vec<f64>,
        y_kernel: KernelSpec,
    ) -> Result<Self> {
        if index.len() != ys.len() || ys.len() != log_denominators.len() {
            return Err(Error::Dimension { expected: index.len(), got: log_denominators.len() });
        }
        if log_denominators.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cached denominators must be positive and finite"));
        }
        Ok(Self { beta: Vec::new(), index, ys, log_den: log_denominators, y_kernel, renormalize: true })
    }

    /// Leave-one-out weights renormalized over `i ≠ k` (default) or divided
    /// by the full-sample kernel sum.
    pub fn renormalized(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn index(&self) -> &[f64] {
        &self.index
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn y_kernel(&self) -> &KernelSpec {
        &self.y_kernel
    }

    /// `Bᵢ = log exp{∫₀^{βᵀXᵢ} m̂}`.
    pub fn log_denominators(&self) -> &[f64] {
        &self.log_den
    }

    pub fn denominators(&self) -> Vec<f64> {
        self.log_den.iter().map(|&b| exp(b)).collect()
    }

    /// Multiplies every cached denominator by `c > 0`.
    pub fn scale_denominators(&mut self, c: f64) {
        let lc = ln(c);
        self.log_den.iter_mut().for_each(|b| *b += lc);
    }

    /// `log f̃_β(y)`, with observation `exclude` dropped from the sums.
    ///
    /// A query point farther than [`ISOLATION_BANDWIDTHS`] bandwidths from
    /// every response is rejected as isolated. Leave-one-out evaluations at
    /// the sample points fail only when the kernel weights underflow.
    pub fn log_lfc_at(&self, y: f64, exclude: Option<usize>) -> Result<f64> {
        if let Some(k) = exclude {
            if self.len() < 3 {
                return Err(Error::invalid("leave-one-out curve needs n >= 3"));
            }
            if k >= self.len() {
                return Err(Error::invalid("excluded index out of range"));
            }
        }
        let h = self.y_kernel.bandwidth();
        let mut num = LogSumExp::new();
        let mut den = LogSumExp::new();
        let mut den_all = LogSumExp::new();
        let mut nearest = f64::INFINITY;
        for i in 0..self.ys.len() {
            let lk = self.y_kernel.log_eval(self.ys[i] - y);
            den_all.push(lk);
            if Some(i) == exclude {
                continue;
            }
            nearest = nearest.min((self.ys[i] - y).abs());
            den.push(lk);
            num.push(self.index[i] * y - self.log_den[i] + lk);
        }
        let den = if self.renormalize { den.value() } else { den_all.value() };
        let far = exclude.is_none() && nearest > ISOLATION_BANDWIDTHS * h;
        if far || den < ln(DENOMINATOR_FLOOR) {
            return Err(Error::IsolatedY(y));
        }
        let v = den - num.value();
        if !v.is_finite() {
            return Err(Error::LfcOverflow(y));
        }
        Ok(v)
    }

    /// `f̃_β(y)`; with `exclude = Some(k)` the leave-one-out value at `Y_k`.
    pub fn lfc_at(&self, y: f64, exclude: Option<usize>) -> Result<f64> {
        Ok(exp(self.log_lfc_at(y, exclude)?))
    }

    /// `log f̃_β(Y_k)` leave-one-out, for every `k`.
    pub fn log_lfc_loo(&self) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.log_lfc_at(self.ys[k], Some(k))).collect()
    }

    /// `log f̃_β(Y_k)` with the full sample, for every `k`.
    pub fn log_lfc_data(&self) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| self.log_lfc_at(self.ys[k], None)).collect()
    }

    /// `log` of the Monte Carlo normalizer `(1/n) Σᵢ f̃_β(Yᵢ) / p̂_Y(Yᵢ)`
    /// from `log f̃_β(Yᵢ)`, with the density estimate `p̂_Y` leave-one-out.
    pub fn log_normalizer(&self, log_f: &[f64]) -> Result<f64> {
        let mut acc = LogSumExp::new();
        for (i, lf) in log_f.iter().enumerate() {
            let p = nw_density(&self.ys, &self.y_kernel, self.ys[i], Some(i))
                .map_err(|_| Error::DensityFloor(i))?;
            if p < DENOMINATOR_FLOOR {
                return Err(Error::DensityFloor(i));
            }
            acc.push(lf - ln(p));
        }
        Ok(acc.value() - ln(self.len() as f64))
    }

    /// Divides `f̃_β` by its Monte Carlo normalizer.
    pub fn standardize(&self) -> Result<Standardized<'_>> {
        let log_f = self.log_lfc_data()?;
        let log_norm = self.log_normalizer(&log_f)?;
        Ok(Standardized { lfc: self, log_normalizer: log_norm })
    }
}

/// `f̂_β = f̃_β / normalizer`.
#[derive(Debug, Clone, Copy)]
pub struct Standardized<'a> {
    lfc: &'a LfcEvaluator,
    log_normalizer: f64,
}

impl Standardized<'_> {
    pub fn normalizer(&self) -> f64 {
        exp(self.log_normalizer)
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn f_hat(&self, y: f64) -> Result<f64> {
        Ok(exp(self.lfc.log_lfc_at(y, None)? - self.log_normalizer))
    }

    pub fn f_hat_loo(&self, k: usize) -> Result<f64> {
        Ok(exp(self.lfc.log_lfc_at(self.lfc.ys[k], Some(k))? - self.log_normalizer))
    }
}
