use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use spef_core::{
    functional_derivative_check, lfc_observed, log_density, log_partition, log_partition_slope,
    nw_regress, score_mean_check, Dataset, FnMeasure, KernelSpec, LfcEvaluator, Observation,
    ProfileConfig, ProfileObjective, RankObjective, StandardNormal,
};

fn sample(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-3.0f64..3.0, len),
        prop::collection::vec(-5.0f64..5.0, len),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_weights_reproduce_constants((xs, _) in sample(12), c in -10.0f64..10.0, t in -4.0f64..4.0, h in 0.1f64..3.0) {
        let ys = vec![c; xs.len()];
        let v = nw_regress(&xs, &ys, &KernelSpec::gaussian(h).unwrap(), t).unwrap();
        prop_assert!((v - c).abs() < 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn zero_beta_curve_is_one((xs, ys) in sample(10), y in -4.0f64..4.0) {
        let d = Dataset::from_scalar(&xs, &ys).unwrap();
        let k = KernelSpec::gaussian(1.5).unwrap();
        let lfc = LfcEvaluator::new(&[0.0], &d, k, k).unwrap();
        if let Ok(v) = lfc.lfc_at(y, None) {
            prop_assert!((v - 1.0).abs() < 1e-12);
        }
        for i in 0..xs.len() {
            prop_assert!((lfc.lfc_at(ys[i], Some(i)).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_zero_beta_and_bounds((xs, ys) in sample(9), b in -20.0f64..20.0) {
        let r = RankObjective::new(&Dataset::from_scalar(&xs, &ys).unwrap()).unwrap();
        prop_assert_eq!(r.loglik(&[0.0]).unwrap(), -std::f64::consts::LN_2);
        prop_assert!(r.loglik(&[b]).unwrap() <= 0.0);
    }

    #[test]
    fn rank_shift_invariance_and_antisymmetry((xs, ys) in sample(8), b in -5.0f64..5.0, sx in -10.0f64..10.0, sy in -10.0f64..10.0) {
        let base = RankObjective::new(&Dataset::from_scalar(&xs, &ys).unwrap()).unwrap().loglik(&[b]).unwrap();
        let xs2: Vec<f64> = xs.iter().map(|x| x + sx).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| y + sy).collect();
        let shifted = RankObjective::new(&Dataset::from_scalar(&xs2, &ys2).unwrap()).unwrap().loglik(&[b]).unwrap();
        prop_assert!((base - shifted).abs() < 1e-9);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let flipped = RankObjective::new(&Dataset::from_scalar(&neg, &ys).unwrap()).unwrap().loglik(&[-b]).unwrap();
        prop_assert!((base - flipped).abs() < 1e-12);
    }

    #[test]
    fn rank_increasing_on_concordant_data(mut xs in prop::collection::vec(-3.0f64..3.0, 6), b in 0.0f64..5.0, db in 0.01f64..1.0) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        prop_assume!(xs.len() >= 2);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 0.1 * x * x * x).collect();
        let r = RankObjective::new(&Dataset::from_scalar(&xs, &ys).unwrap()).unwrap();
        prop_assert!(r.loglik(&[b + db]).unwrap() > r.loglik(&[b]).unwrap());
    }

    #[test]
    fn gaussian_log_partition(theta in -3.0f64..3.0) {
        let b = log_partition(theta, &StandardNormal::default()).unwrap();
        prop_assert!((b - 0.5 * theta * theta).abs() < 1e-6);
    }

    #[test]
    fn observed_curve_equals_full_curve_bitwise((xs, ys) in sample(10), beta in -2.0f64..2.0, y in -3.0f64..3.0) {
        let d = Dataset::from_scalar(&xs, &ys).unwrap();
        let ki = KernelSpec::gaussian(0.9).unwrap();
        let ky = KernelSpec::gaussian(1.1).unwrap();
        let a = LfcEvaluator::new(&[beta], &d, ki, ky).unwrap();
        let b = lfc_observed(&[beta], &d, ki, ky).unwrap();
        prop_assert_eq!(a.log_denominators(), b.log_denominators());
        match (a.log_lfc_at(y, None), b.log_lfc_at(y, None)) {
            (Ok(u), Ok(v)) => prop_assert_eq!(u.to_bits(), v.to_bits()),
            (u, v) => prop_assert_eq!(u, v),
        }
    }

    #[test]
    fn profile_evaluation_is_repeatable((xs, ys) in sample(15), beta in -3.0f64..3.0) {
        let obj = ProfileObjective::new(Dataset::from_scalar(&xs, &ys).unwrap(), ProfileConfig::default()).unwrap();
        let a = obj.loglik(&[beta]).unwrap();
        let b = obj.loglik(&[beta]).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}

/// `l(β, f + ε·B)` with a Gaussian-shaped bump `B` of unit height at `y`
/// whose tilted mass `∫exp{θt}B(t)dt` equals `exp{θy}`, so the directional
/// derivative collapses to the pointwise functional derivative.
#[test]
fn functional_derivative_matches_gateaux_limit() {
    let beta = [0.7];
    let x = [1.0];
    let y = 0.3;
    let theta = 0.7;
    // Solve w·√(2π)·exp(θ²w²/2) = 1 by bisection.
    let (mut lo, mut hi) = (1e-3, 1.0);
    for _ in 0..200 {
        let w: f64 = 0.5 * (lo + hi);
        let v = w * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * theta * theta * w * w).exp();
        if v > 1.0 {
            hi = w;
        } else {
            lo = w;
        }
    }
    let w = 0.5 * (lo + hi);
    let bump = move |t: f64| (-0.5 * ((t - y) / w).powi(2)).exp();
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let obs = Observation::new(x.to_vec(), y);
    let l = |eps: f64| {
        let f = FnMeasure::new(move |t: f64| phi(t) + eps * bump(t), -8.0, 8.0);
        log_density(&beta, &f, &obs).unwrap()
    };
    let analytic = functional_derivative_check(&beta, &StandardNormal::default(), &x, y).unwrap();
    for eps in [1e-2, 1e-3, 1e-4] {
        let numeric = (l(eps) - l(-eps)) / (2.0 * eps);
        let rel = (numeric - analytic).abs() / analytic.abs();
        assert!(rel < 1e-3, "ε={eps}: {numeric} vs {analytic}");
    }
}

fn gaussian_draws(beta: f64, n: usize, seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let xd = Normal::new(1.0, 1.0).unwrap();
    let ed = Normal::new(0.0, 1.0).unwrap();
    let obs = (0..n)
        .map(|_| {
            let x: f64 = xd.sample(&mut rng);
            Observation::new(vec![x], beta * x + ed.sample(&mut rng))
        })
        .collect();
    Dataset::new(obs).unwrap()
}

#[test]
fn score_mean_is_zero_within_monte_carlo_band() {
    let n = 10_000;
    let draws = gaussian_draws(2.0, n, 17);
    let f = StandardNormal::default();
    let m = score_mean_check(&[2.0], &f, &draws).unwrap()[0];
    let scores: Vec<f64> = draws
        .observations()
        .iter()
        .map(|o| o.x[0] * (o.y - log_partition_slope(2.0 * o.x[0], &f).unwrap()))
        .collect();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((m - mean).abs() < 1e-12);
    assert!(m.abs() <= 3.0 * sd / (n as f64).sqrt(), "{m} vs band {}", 3.0 * sd / (n as f64).sqrt());
}

#[test]
fn score_mean_detects_misspecification() {
    let draws = gaussian_draws(2.0, 10_000, 18);
    let m = score_mean_check(&[0.0], &StandardNormal::default(), &draws).unwrap()[0];
    assert!(m > 0.5);
    assert!((m - 4.0).abs() < 0.3);
}

#[test]
fn score_mean_exact_zero_at_the_conditional_mean() {
    let f = StandardNormal::default();
    let y = log_partition_slope(1.4, &f).unwrap();
    let d = Dataset::new(vec![Observation::new(vec![2.0], y), Observation::new(vec![2.0], y)]).unwrap();
    assert_eq!(score_mean_check(&[0.7], &f, &d).unwrap(), vec![0.0]);
}
