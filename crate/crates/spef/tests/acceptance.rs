//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Monte Carlo criteria use 100 replications from the default master seed.
//! The process exits 0 after reporting; set `SPEF_ACCEPTANCE_STRICT=1` to
//! exit 1 when any criterion fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spef::core::{
    functional_derivative_check, lfc_observed, log_density, log_partition, log_partition_slope,
    nw_regress, score_mean_check, BPath, Dataset, FnMeasure, KernelFamily, KernelSpec,
    LfcEvaluator, MechanismKind, Observation, ProfileConfig, ProfileObjective, RankObjective,
    StandardNormal,
};
use spef::output::summary_table;
use spef::sim::{
    f_curve_median, grid, median_curve, run_experiment, Estimator, Experiment, ExperimentConfig,
    ExperimentRun,
};
use spef::with_threads;

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String, start: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} ({name}): {detail} [{:.0}s]", start.elapsed().as_secs_f64());
        if !pass {
            self.failed.push(id);
        }
    }
}

fn exp1(n: usize, mu: f64, sigma2: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Experiment::Exp1);
    (c.n, c.mu, c.sigma2) = (n, mu, sigma2);
    c
}

fn run(c: &ExperimentConfig) -> ExperimentRun {
    run_experiment(c).expect("valid configuration")
}

fn stat(r: &ExperimentRun, e: Estimator, j: usize) -> &spef::sim::SimSummary {
    r.summary(e, j).expect("summary present")
}

fn criterion_1(rep: &mut Report) {
    let t = Instant::now();
    let r = run(&exp1(100, 1.0, 1.0));
    let p = stat(&r, Estimator::Profile, 0);
    let b = stat(&r, Estimator::Rank, 0);
    let pass = (1.95..=2.25).contains(&p.mean) && (0.04..=0.16).contains(&p.mse) && (1.9..=2.2).contains(&b.mean);
    let detail = format!(
        "profile mean {:.4} (want [1.95, 2.25]), MSE {:.4} (want [0.04, 0.16]); rank mean {:.4} (want [1.9, 2.2])",
        p.mean, p.mse, b.mean
    );
    rep.line(1, "Table 1, mu=1, sigma2=1", pass, detail, t);
}

fn criterion_2(rep: &mut Report) {
    let t = Instant::now();
    let c = exp1(100, 1.0, 0.1);
    let r = run(&c);
    let p = stat(&r, Estimator::Profile, 0);
    let b = stat(&r, Estimator::Rank, 0);
    let pass = b.mean > 50.0 && (2.0..=2.6).contains(&p.mean);
    let detail = format!(
        "rank mean {:.4} (want > 50, box [{}, {}]); profile mean {:.4} (want [2.0, 2.6])",
        b.mean, c.rank_box.0, c.rank_box.1, p.mean
    );
    rep.line(2, "small-variance blow-up", pass, detail, t);
}

/// Returns the `μ = 1` run for reuse.
fn criterion_3(rep: &mut Report) -> ExperimentRun {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut mu1 = None;
    for mu in [0.0, 1.0, 2.0, 3.0] {
        let r = run(&exp1(100, mu, 1.15));
        let p = stat(&r, Estimator::Profile, 0);
        let b = stat(&r, Estimator::Rank, 0);
        pass &= p.bias.abs() <= 0.15 && b.bias <= -0.3;
        parts.push(format!("mu={mu}: profile bias {:+.4}, rank bias {:+.4}", p.bias, b.bias));
        if mu == 1.0 {
            mu1 = Some(r);
        }
    }
    let detail = format!("{} (want |profile| <= 0.15, rank <= -0.3)", parts.join("; "));
    rep.line(3, "bias separation at sigma2=1.15", pass, detail, t);
    mu1.expect("mu = 1 run")
}

fn criterion_4(rep: &mut Report, small: &ExperimentRun) {
    let t = Instant::now();
    let large = run(&exp1(400, 1.0, 1.15));
    let a = stat(small, Estimator::Profile, 0);
    let b = stat(&large, Estimator::Profile, 0);
    let ratio = (a.sd * 100f64.sqrt()) / (b.sd * 400f64.sqrt());
    let pass = b.mse < a.mse && (0.5..=2.0).contains(&ratio);
    let detail = format!(
        "MSE n=100 {:.4}, n=400 {:.4} (want decrease); sd*sqrt(n) ratio {:.3} (want [0.5, 2.0])",
        a.mse, b.mse, ratio
    );
    rep.line(4, "consistency trend", pass, detail, t);
}

fn criterion_5(rep: &mut Report) {
    let t = Instant::now();
    let mut c = ExperimentConfig::new(Experiment::Exp2);
    (c.n, c.sigma2) = (200, 1.0);
    let r = run(&c);
    let mut pass = true;
    let mut parts = Vec::new();
    for j in 0..3 {
        let s = stat(&r, Estimator::Profile, j);
        pass &= (s.mean - s.truth).abs() <= 0.12 && s.mse <= 0.10;
        parts.push(format!("beta{} mean {:.4} MSE {:.4}", j + 1, s.mean, s.mse));
    }
    let detail = format!("{} (want within 0.12 of (1, 2, 3), MSE <= 0.10); failures {}", parts.join(", "), r.failures(Estimator::Profile));
    rep.line(5, "Experiment 2, n=200, sigma2=1", pass, detail, t);
}

fn criterion_6(rep: &mut Report) {
    let t = Instant::now();
    let mut c = ExperimentConfig::new(Experiment::Exp3);
    (c.n, c.mechanism, c.c) = (400, Some(MechanismKind::NondecomposableLine), 0.9);
    let r = run(&c);
    let p = stat(&r, Estimator::Profile, 0);
    let o = stat(&r, Estimator::Outcome, 0);
    let b = stat(&r, Estimator::Rank, 0);
    let pass = p.bias.abs() <= 0.10 && b.mean >= 3.0;
    let detail = format!(
        "profile bias {:+.4} (want |.| <= 0.10; outcome-regression fit {:+.4}); rank mean {:.4} (want >= 3.0)",
        p.bias, o.bias, b.mean
    );
    rep.line(6, "Experiment 3, mechanism (2), c=0.9, n=400", pass, detail, t);
}

fn criterion_7(rep: &mut Report) {
    let t = Instant::now();
    let betas = grid(0.0, 10.0, 0.5);
    let curve = |s2: f64| -> Vec<f64> {
        let c = exp1(100, 0.0, s2);
        median_curve(&c, &betas).unwrap().iter().map(|p| p.median.unwrap()).collect()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for s2 in [0.05, 0.1] {
        let v = curve(s2);
        let drops: Vec<f64> = v.windows(2).filter(|w| w[1] < w[0]).map(|w| w[0] - w[1]).collect();
        let ok = drops.is_empty() || (drops.len() == 1 && drops[0] <= 1e-4);
        pass &= ok;
        parts.push(format!("sigma2={s2}: {} inversions", drops.len()));
    }
    let v = curve(1.0);
    let arg = betas[v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0];
    pass &= (1.0..=4.0).contains(&arg);
    parts.push(format!("sigma2=1: argmax {arg} (want [1, 4])"));
    rep.line(7, "Figure 1 monotonicity", pass, parts.join("; "), t);
}

fn criterion_8(rep: &mut Report) {
    let t = Instant::now();
    let ys = grid(-2.5, 2.5, 0.1);
    let pts = f_curve_median(&exp1(100, 0.0, 1.15), &ys).unwrap();
    let est: Vec<f64> = pts.iter().map(|p| p.median.unwrap_or(f64::NAN)).collect();
    let peak = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dev = ys
        .iter()
        .zip(&est)
        .map(|(y, v)| (v / peak - (-0.5 * y * y).exp()).abs())
        .fold(0.0, f64::max);
    let pass = dev <= 0.15;
    rep.line(8, "Figure 2 shape", pass, format!("max deviation after peak rescaling {dev:.4} (want <= 0.15)"), t);
}

fn gauss(u: f64, h: f64) -> f64 {
    (-0.5 * (u / h).powi(2)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt())
}

/// Five-point profile likelihood with plain loops.
fn naive_profile(xs: &[f64], ys: &[f64], hi: f64, hy: f64, beta: f64, path: BPath, points: usize) -> f64 {
    let n = xs.len();
    let theta: Vec<f64> = xs.iter().map(|x| beta * x).collect();
    let regress = |t: f64| {
        let w: Vec<f64> = theta.iter().map(|th| gauss(th - t, hi)).collect();
        w.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>()
    };
    let step = theta.iter().fold(0.0f64, |m, v| m.max(v.abs())) / 200.0;
    let big_b: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let mut nodes = vec![0.0];
            let mut k = 1;
            while (k as f64) * step < t.abs() - 1e-12 * step * 200.0 {
                nodes.push(k as f64 * step);
                k += 1;
            }
            nodes.push(t.abs());
            let s: f64 = nodes
                .windows(2)
                .map(|w| 0.5 * (w[1] - w[0]) * (regress(t.signum() * w[0]) + regress(t.signum() * w[1])))
                .sum();
            t.signum() * s
        })
        .collect();
    let lfc = |y: f64, skip: Option<usize>| {
        let (mut num, mut den) = (0.0, 0.0);
        for i in (0..n).filter(|&i| Some(i) != skip) {
            let k = gauss(ys[i] - y, hy);
            num += k;
            den += (theta[i] * y - big_b[i]).exp() * k;
        }
        num / den
    };
    let b: Vec<f64> = match path {
        BPath::IndexIntegral => big_b.clone(),
        BPath::Quadrature => {
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * hy;
            let top = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * hy;
            let h = (top - lo) / (points - 1) as f64;
            theta
                .iter()
                .map(|&t| {
                    (0..points)
                        .map(|g| {
                            let y = lo + g as f64 * h;
                            let w = if g == 0 || g + 1 == points { 0.5 * h } else { h };
                            w * (t * y).exp() * lfc(y, None)
                        })
                        .sum::<f64>()
                        .ln()
                })
                .collect()
        }
    };
    (0..n).map(|i| theta[i] * ys[i] - b[i] + lfc(ys[i], Some(i)).ln()).sum()
}

fn criterion_9(rep: &mut Report) {
    let t = Instant::now();
    let mut failures: Vec<&str> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let unit = Normal::new(0.0, 1.0).unwrap();

    // Kernel weights sum to one: constants are reproduced and kernels integrate to one.
    let xs: Vec<f64> = (0..12).map(|_| unit.sample(&mut rng)).collect();
    let mut ok = [0.3, 1.0, 2.5].iter().all(|&h| {
        let k = KernelSpec::gaussian(h).unwrap();
        [-1.0, 0.2, 3.0].iter().all(|&t| (nw_regress(&xs, &[4.2; 12], &k, t).unwrap() - 4.2).abs() < 1e-12)
    });
    for fam in [KernelFamily::Gaussian, KernelFamily::Epanechnikov] {
        let m = 200_000;
        let mass: f64 = (0..=m).map(|i| fam.eval(-10.0 + 20.0 * i as f64 / m as f64) * 20.0 / m as f64).sum();
        ok &= (mass - 1.0).abs() < 1e-6;
    }
    if !ok {
        failures.push("kernel normalization");
    }

    // β = 0 collapses the curve to one and the rank surrogate to −log 2.
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + unit.sample(&mut rng)).collect();
    let d = Dataset::from_scalar(&xs, &ys).unwrap();
    let k = KernelSpec::gaussian(1.2).unwrap();
    let lfc = LfcEvaluator::new(&[0.0], &d, k, k).unwrap();
    let flat = (0..12).all(|i| (lfc.lfc_at(ys[i], Some(i)).unwrap() - 1.0).abs() < 1e-12)
        && (lfc.lfc_at(0.1, None).unwrap() - 1.0).abs() < 1e-12;
    let rank0 = RankObjective::new(&d).unwrap().loglik(&[0.0]).unwrap() == -std::f64::consts::LN_2;
    if !(flat && rank0) {
        failures.push("beta = 0 collapse");
    }

    // Gaussian log-partition.
    let f = StandardNormal::default();
    if !(0..=60).all(|i| {
        let th = -3.0 + 0.1 * i as f64;
        (log_partition(th, &f).unwrap() - 0.5 * th * th).abs() < 1e-6
    }) {
        failures.push("log-partition");
    }

    // Functional derivative against a Gateaux difference with a mass-matched bump.
    let (theta, y) = (0.7, 0.3);
    let (mut lo, mut hi) = (1e-3, 1.0);
    for _ in 0..200 {
        let w: f64 = 0.5 * (lo + hi);
        if w * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * theta * theta * w * w).exp() > 1.0 {
            hi = w;
        } else {
            lo = w;
        }
    }
    let w = 0.5 * (lo + hi);
    let obs = Observation::new(vec![1.0], y);
    let l = |eps: f64| {
        let g = FnMeasure::new(
            move |s: f64| gauss(s, 1.0) + eps * (-0.5 * ((s - y) / w).powi(2)).exp(),
            -8.0,
            8.0,
        );
        log_density(&[theta], &g, &obs).unwrap()
    };
    let analytic = functional_derivative_check(&[theta], &f, &[1.0], y).unwrap();
    if ![1e-2, 1e-3, 1e-4].iter().all(|&e| ((l(e) - l(-e)) / (2.0 * e) - analytic).abs() <= 1e-3 * analytic.abs()) {
        failures.push("functional derivative");
    }

    // Score mean inside the 3-sigma band.
    let xd = Normal::new(1.0, 1.0).unwrap();
    let draws: Vec<Observation> = (0..10_000)
        .map(|_| {
            let x = xd.sample(&mut rng);
            Observation::new(vec![x], 2.0 * x + unit.sample(&mut rng))
        })
        .collect();
    let scores: Vec<f64> =
        draws.iter().map(|o| o.x[0] * (o.y - log_partition_slope(2.0 * o.x[0], &f).unwrap())).collect();
    let m = score_mean_check(&[2.0], &f, &Dataset::new(draws).unwrap()).unwrap()[0];
    let mean = scores.iter().sum::<f64>() / 1e4;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / 9_999.0).sqrt();
    if m.abs() > 3.0 * sd / 100.0 {
        failures.push("score mean");
    }

    // Brute-force profile likelihood on five points.
    let (fx, fy) = ([-1.1, -0.3, 0.2, 0.7, 1.5], [-2.4, -0.2, 0.9, 1.1, 3.3]);
    let mut ok = true;
    for path in [BPath::Quadrature, BPath::IndexIntegral] {
        let cfg = ProfileConfig { index_bandwidth: Some(0.8), y_bandwidth: Some(0.6), b_path: path, ..Default::default() };
        let obj = ProfileObjective::new(Dataset::from_scalar(&fx, &fy).unwrap(), cfg).unwrap();
        for beta in [-0.5, 0.4, 1.0, 1.9, 2.7] {
            let want = naive_profile(&fx, &fy, 0.8, 0.6, beta, path, cfg.quad_points);
            ok &= (obj.loglik(&[beta]).unwrap() - want).abs() < 1e-8;
        }
    }
    if !ok {
        failures.push("five-point oracle");
    }

    // Fully observed data: observed-subset curve equals the full curve bit for bit.
    let ki = KernelSpec::gaussian(0.9).unwrap();
    let a = LfcEvaluator::new(&[1.3], &d, ki, k).unwrap();
    let b = lfc_observed(&[1.3], &d, ki, k).unwrap();
    let same = a.log_denominators() == b.log_denominators()
        && [-1.0, 0.0, 0.5, 2.0]
            .iter()
            .all(|&y| a.log_lfc_at(y, None).map(f64::to_bits) == b.log_lfc_at(y, None).map(f64::to_bits));
    if !same {
        failures.push("full-observation equivalence");
    }

    // CSV bytes do not depend on the worker count.
    let mut c = exp1(30, 1.0, 1.0);
    c.replications = 4;
    let csv = |threads| {
        let r = with_threads(Some(threads), || run_experiment(&c).unwrap()).unwrap();
        summary_table(&[("x".to_string(), r)]).to_csv()
    };
    if csv(1) != csv(3) {
        failures.push("CSV determinism");
    }

    let secs = t.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 60.0;
    let detail = if failures.is_empty() {
        "kernel normalization, beta=0 collapse, log-partition, functional derivative, score band, \
         five-point oracle, full-observation equivalence, CSV determinism"
            .to_string()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    rep.line(9, "property suite", pass, detail, t);
}

fn main() {
    let seed = ExperimentConfig::new(Experiment::Exp1).master_seed;
    println!("acceptance run, master seed {seed}, 100 replications per configuration");
    let mut rep = Report { failed: Vec::new() };
    criterion_9(&mut rep);
    criterion_7(&mut rep);
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    let mu1 = criterion_3(&mut rep);
    criterion_4(&mut rep, &mu1);
    criterion_6(&mut rep);
    criterion_8(&mut rep);
    criterion_5(&mut rep);
    rep.failed.sort_unstable();
    println!("{} of 9 criteria passed; failed: {:?}", 9 - rep.failed.len(), rep.failed);
    if !rep.failed.is_empty() && std::env::var_os("SPEF_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
