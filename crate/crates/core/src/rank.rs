//! Second-order conditional rank likelihood, the comparison estimator.
//!
//! ```text
//! ℓ_N(β) = −C(n,2)⁻¹ Σ_{i<j} log(1 + exp{−(Yᵢ − Yⱼ)·βᵀ(Xᵢ − Xⱼ)})
//! ```
//!
//! Only pairwise differences enter, so the base measure drops out.

use alloc::vec::Vec;

use crate::math::{dot, softplus};
use crate::model::Dataset;
use crate::optim::{maximize, SearchConfig};
use crate::profile::FitResult;
use crate::{Error, Result};

/// Exponents are clamped to `±EXPONENT_CLAMP` before exponentiation.
pub const EXPONENT_CLAMP: f64 = 700.0;

/// Pairwise differences of the observed subset.
#[derive(Debug, Clone)]
pub struct RankObjective {
    d: usize,
    dy: Vec<f64>,
    /// Row-major `pairs × d`.
    dx: Vec<f64>,
}

impl RankObjective {
    /// Builds the objective from the observed (`δ = 1`) rows of `data`.
    pub fn new(data: &Dataset) -> Result<Self> {
        let obs = data.observed()?;
        let rows = obs.observations();
        if rows.len() < 2 {
            return Err(Error::invalid("rank likelihood needs n >= 2 observed rows"));
        }
        let d = obs.dim();
        let pairs = rows.len() * (rows.len() - 1) / 2;
        let mut dy = Vec::with_capacity(pairs);
        let mut dx = Vec::with_capacity(pairs * d);
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                dy.push(rows[i].y - rows[j].y);
                dx.extend(rows[i].x.iter().zip(&rows[j].x).map(|(a, b)| a - b));
            }
        }
        Ok(Self { d, dy, dx })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn pairs(&self) -> usize {
        self.dy.len()
    }

    pub fn loglik(&self, beta: &[f64]) -> Result<f64> {
        if beta.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: beta.len() });
        }
        // Running mean: exact when every pair contributes the same value.
        let mut mean = 0.0;
        for (k, (dy, dx)) in self.dy.iter().zip(self.dx.chunks_exact(self.d)).enumerate() {
            let v = softplus((-dy * dot(beta, dx)).clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP));
            mean += (v - mean) / (k + 1) as f64;
        }
        Ok(-mean)
    }
}

/// `ℓ_N(β)` for `objective`.
pub fn rank_loglik(objective: &RankObjective, beta: &[f64]) -> Result<f64> {
    objective.loglik(beta)
}

/// Maximizes the rank likelihood over the search box.
pub fn rank_fit(objective: &RankObjective, search: &SearchConfig) -> Result<FitResult> {
    if search.dim() != objective.d {
        return Err(Error::Dimension { expected: objective.d, got: search.dim() });
    }
    let m = maximize(|b| objective.loglik(b).unwrap_or(f64::NEG_INFINITY), search)?;
    Ok(FitResult {
        beta_hat: m.x,
        loglik_at_max: m.value,
        trace: m.trace,
        converged: m.converged,
        curves: None,
    })
}
