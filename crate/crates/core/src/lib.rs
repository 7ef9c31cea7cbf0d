//! Profile-likelihood estimation for the semiparametric exponential family.
//!
//! The model is `p(y | x) = exp{βᵀx·y − b(βᵀx, f) + log f(y)}` with an unknown
//! base measure `f`. This crate holds the numerical core: quadrature of the
//! log-partition, kernel smoothers, the explicit least-favorable-curve
//! estimator of `f` for fixed `β`, the profile likelihood and its maximizer,
//! the pairwise rank surrogate used as a baseline, and the outcome-regression
//! estimator for selectively observed data.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

#[cfg(test)]
extern crate std;

extern crate alloc;

mod error;
mod math;

pub mod kernel;
pub mod lfc;
pub mod missing;
pub mod model;
pub mod optim;
pub mod profile;
pub mod quad;
pub mod rank;

pub use error::{Error, Result};
pub use kernel::{bandwidth_rule, nw_density, nw_regress, KernelFamily, KernelSpec};
pub use lfc::{cum_index_integral, IndexIntegral, LfcEvaluator, Standardized};
pub use missing::{
    apply_missingness, fit_observed, g1_recover, g_functional, lfc_observed, selection_shift,
    MechanismKind, MissingMechanism, ObservedObjective, OutcomeRegressionFit,
};
pub use model::{
    functional_derivative_check, log_density, log_partition, log_partition_slope,
    score_mean_check, BaseMeasure, Dataset, FnMeasure, Observation, StandardNormal, Uniform,
};
pub use optim::{maximize, Maximum, SearchConfig};
pub use profile::{
    fit, profile_loglik, BPath, BaseMeasureEstimate, FStar, FitResult, ProfileConfig,
    ProfileObjective,
};
pub use quad::Grid;
pub use rank::{rank_fit, rank_loglik, RankObjective};
