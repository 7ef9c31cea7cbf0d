use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use spef::core::MechanismKind;
use spef::output::summary_table;
use spef::sim::{
    f_curve_median, generate, grid, run_experiment, run_replication, summarize, Estimator,
    Experiment, ExperimentConfig,
};
use spef::with_threads;

fn small_exp1() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::Exp1);
    c.n = 30;
    c.replications = 6;
    c
}

#[test]
fn same_seed_and_index_give_the_same_data() {
    let c = ExperimentConfig::new(Experiment::Exp1);
    assert_eq!(generate(&c, 4).unwrap(), generate(&c, 4).unwrap());
    assert_ne!(generate(&c, 4).unwrap(), generate(&c, 5).unwrap());
    let mut other = c.clone();
    other.master_seed += 1;
    assert_ne!(generate(&c, 4).unwrap(), generate(&other, 4).unwrap());
}

#[test]
fn replications_do_not_depend_on_each_other() {
    let mut c = small_exp1();
    let run = run_experiment(&c).unwrap();
    let alone = run_replication(&c, 4);
    for (a, b) in run.replications[4].estimates.iter().zip(&alone.estimates) {
        assert_eq!(a, b);
    }
    c.replications = 50;
    assert_eq!(generate(&c, 4).unwrap(), generate(&small_exp1(), 4).unwrap());
}

#[test]
fn exp2_covariates_have_the_banded_covariance() {
    let mut c = ExperimentConfig::new(Experiment::Exp2);
    c.n = 100_000;
    let data = generate(&c, 0).unwrap();
    let n = data.len() as f64;
    let obs = data.observations();
    let mean: Vec<f64> = (0..3).map(|j| obs.iter().map(|o| o.x[j]).sum::<f64>() / n).collect();
    for i in 0..3 {
        for j in 0..3 {
            let cov = obs.iter().map(|o| (o.x[i] - mean[i]) * (o.x[j] - mean[j])).sum::<f64>() / (n - 1.0);
            let want = 0.1f64.powi((i as i32 - j as i32).abs());
            assert!((cov - want).abs() < 0.02, "Σ[{i}][{j}] = {cov}, want {want}");
        }
    }
}

#[test]
fn indicator_mechanism_matches_brute_force_fraction() {
    let mut c = ExperimentConfig::new(Experiment::Exp3);
    c.n = 100_000;
    c.mechanism = Some(MechanismKind::DecomposableIndicator);
    c.c = 0.6;
    let data = generate(&c, 0).unwrap();
    let harness = data.observed_count() as f64 / data.len() as f64;

    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let xd = Normal::new(2.0, 1.0).unwrap();
    let ed = Normal::new(0.0, 1.1f64.sqrt()).unwrap();
    let m = 100_000;
    let mut total = 0.0;
    for _ in 0..m {
        let x = xd.sample(&mut rng);
        let y = 2.0 * x + ed.sample(&mut rng);
        if x > 0.0 && y > 0.0 {
            total += 0.6;
        }
    }
    let brute = total / m as f64;
    assert!((harness - brute).abs() < 0.02, "{harness} vs {brute}");
}

#[test]
fn too_few_observed_rows_fail_the_replication() {
    let mut c = ExperimentConfig::new(Experiment::Exp3);
    c.n = 10;
    c.c = 0.5;
    c.replications = 3;
    let run = run_experiment(&c).unwrap();
    assert_eq!(run.failures(Estimator::Profile), 3);
    assert!(!run.any_success());
    let s = run.summary(Estimator::Rank, 0).unwrap();
    assert_eq!((s.replications_used, s.failures), (0, 3));
    assert!(s.mean.is_nan());
}

#[test]
fn summaries_do_not_depend_on_worker_count() {
    let c = small_exp1();
    let one = with_threads(Some(1), || run_experiment(&c).unwrap()).unwrap();
    let four = with_threads(Some(4), || run_experiment(&c).unwrap()).unwrap();
    assert_eq!(one.summaries, four.summaries);
    let a = summary_table(&[("x".into(), one)]).to_csv();
    let b = summary_table(&[("x".into(), four)]).to_csv();
    assert_eq!(a, b);
}

#[test]
fn exp3_reports_three_estimators() {
    let mut c = ExperimentConfig::new(Experiment::Exp3);
    c.n = 60;
    c.replications = 2;
    let run = run_experiment(&c).unwrap();
    let labels: Vec<&str> = run.summaries.iter().map(|s| s.estimator.label()).collect();
    assert_eq!(labels, vec!["profile", "rank", "outcome"]);
    let p = run.summary(Estimator::Profile, 0).unwrap();
    let o = run.summary(Estimator::Outcome, 0).unwrap();
    assert!((p.mean - o.mean).abs() < 1e-2, "{} vs {}", p.mean, o.mean);
}

#[test]
fn single_replication_is_degenerate() {
    let mut c = small_exp1();
    c.replications = 1;
    let run = run_experiment(&c).unwrap();
    for s in &run.summaries {
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.mse, s.bias * s.bias);
    }
}

proptest! {
    #[test]
    fn mse_splits_into_bias_and_variance(values in prop::collection::vec(-50.0f64..50.0, 2..40), truth in -10.0f64..10.0) {
        let s = summarize(Estimator::Profile, 0, truth, &values, 0);
        let r = values.len() as f64;
        let rhs = s.bias * s.bias + (r - 1.0) / r * s.sd * s.sd;
        prop_assert!((s.mse - rhs).abs() <= 1e-9 * s.mse.max(1.0));
        prop_assert!(s.mse >= s.bias * s.bias - 1e-9 * s.mse.max(1.0));
    }
}

#[test]
fn isolated_grid_points_are_left_out() {
    let mut c = ExperimentConfig::new(Experiment::Exp1);
    (c.mu, c.sigma2, c.n, c.replications) = (0.0, 1.15, 50, 3);
    let pts = f_curve_median(&c, &[0.0, 10.0]).unwrap();
    assert!(pts[0].median.is_some());
    assert_eq!(pts[1].median, None);
    assert_eq!(pts[1].used, 0);
}

fn phi(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[test]
fn median_curve_is_symmetric_for_centred_design() {
    let mut c = ExperimentConfig::new(Experiment::Exp1);
    (c.mu, c.sigma2) = (0.0, 1.15);
    let ys = grid(-2.5, 2.5, 0.1);
    let pts = f_curve_median(&c, &ys).unwrap();
    let vals: Vec<f64> = pts.iter().map(|p| p.median.unwrap()).collect();
    for k in 0..vals.len() {
        let gap = (vals[k] - vals[vals.len() - 1 - k]).abs();
        assert!(gap <= 0.05, "y = {}: {gap}", ys[k]);
    }
}

#[test]
fn median_curve_error_shrinks_with_n() {
    let ys = grid(-2.5, 2.5, 0.1);
    let err = |n: usize| {
        let mut c = ExperimentConfig::new(Experiment::Exp1);
        (c.mu, c.sigma2, c.n, c.replications) = (1.0, 1.0, n, 40);
        let pts = f_curve_median(&c, &ys).unwrap();
        pts.iter().map(|p| (p.median.unwrap() - phi(p.x)).abs()).sum::<f64>() / pts.len() as f64
    };
    let (small, large) = (err(100), err(400));
    assert!(large < small, "n=100: {small}, n=400: {large}");
}
