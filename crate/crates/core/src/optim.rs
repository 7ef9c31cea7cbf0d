//! Derivative-free maximization over a box.
//!
//! One dimension: a coarse grid scan, then golden-section refinement inside
//! the cell around the best grid point. Two or more: Nelder–Mead on the
//! negated objective from Latin-hypercube starts, with vertices clamped to
//! the box. Non-finite objective values count as infeasible.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::sqrt;
use crate::{Error, Result};

/// Search box and stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Grid points for the one-dimensional scan.
    pub coarse_points: usize,
    /// Golden-section stops once the bracket is narrower than this.
    pub golden_tol: f64,
    /// Nelder–Mead stops once the vertex values spread less than this.
    pub simplex_tol: f64,
    pub max_iter: usize,
    /// Number of Nelder–Mead starts; `None` means `max(3, 2d)`.
    pub starts: Option<usize>,
    /// Seed for the Latin-hypercube starts.
    pub seed: u64,
}

impl SearchConfig {
    /// The box `[lo, hi]ᵈ` with default stopping rules.
    pub fn boxed(d: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; d],
            hi: vec![hi; d],
            coarse_points: 41,
            golden_tol: 1e-4,
            simplex_tol: 1e-6,
            max_iter: 500,
            starts: None,
            seed: 0x5eed,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::invalid("search box bounds must be nonempty and of equal length"));
        }
        for (l, h) in self.lo.iter().zip(&self.hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::invalid(alloc::format!("bad search interval [{l}, {h}]")));
            }
        }
        if self.coarse_points < 2 {
            return Err(Error::invalid("coarse grid needs at least 2 points"));
        }
        Ok(())
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*l, *h);
        }
    }
}

/// Result of [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Every evaluated point, in evaluation order.
    pub trace: Vec<(Vec<f64>, f64)>,
    pub converged: bool,
}

struct Tracer<F> {
    f: F,
    trace: Vec<(Vec<f64>, f64)>,
}

impl<F: FnMut(&[f64]) -> f64> Tracer<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let v = (self.f)(x);
        let v = if v.is_nan() || v == f64::INFINITY { f64::NEG_INFINITY } else { v };
        self.trace.push((x.to_vec(), v));
        v
    }

    fn best(&self) -> Option<(Vec<f64>, f64)> {
        let mut best: Option<&(Vec<f64>, f64)> = None;
        for p in &self.trace {
            if p.1 > f64::NEG_INFINITY && best.is_none_or(|b| p.1 > b.1) {
                best = Some(p);
            }
        }
        best.cloned()
    }
}

/// Maximizes `f` over the search box.
pub fn maximize(f: impl FnMut(&[f64]) -> f64, search: &SearchConfig) -> Result<Maximum> {
    search.validate()?;
    let mut tracer = Tracer { f, trace: Vec::new() };
    let converged = if search.dim() == 1 {
        scan_and_golden(&mut tracer, search)
    } else {
        multistart_simplex(&mut tracer, search)
    };
    let (x, value) = tracer.best().ok_or(Error::Infeasible)?;
    Ok(Maximum { x, value, trace: tracer.trace, converged })
}

fn scan_and_golden<F: FnMut(&[f64]) -> f64>(t: &mut Tracer<F>, s: &SearchConfig) -> bool {
    let (lo, hi) = (s.lo[0], s.hi[0]);
    let cell = (hi - lo) / (s.coarse_points - 1) as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for k in 0..s.coarse_points {
        let x = if k + 1 == s.coarse_points { hi } else { lo + k as f64 * cell };
        let v = t.eval(&[x]);
        if v > best.0 {
            best = (v, x);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return false;
    }
    let a = (best.1 - cell).max(lo);
    let b = (best.1 + cell).min(hi);
    golden(t, a, b, s.golden_tol);
    true
}

fn golden<F: FnMut(&[f64]) -> f64>(t: &mut Tracer<F>, mut a: f64, mut b: f64, tol: f64) {
    let r = (sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = t.eval(&[c]);
    let mut fd = t.eval(&[d]);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = t.eval(&[c]);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = t.eval(&[d]);
        }
    }
    t.eval(&[0.5 * (a + b)]);
}

/// `m` points of a Latin hypercube in the box, deterministic in `seed`.
pub fn latin_hypercube(lo: &[f64], hi: &[f64], m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = lo.len();
    let mut pts = vec![vec![0.0; d]; m];
    for j in 0..d {
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let k = rng.random_range(0..=i);
            perm.swap(i, k);
        }
        for (i, p) in pts.iter_mut().enumerate() {
            let u: f64 = rng.random();
            p[j] = lo[j] + (hi[j] - lo[j]) * (perm[i] as f64 + u) / m as f64;
        }
    }
    pts
}

fn multistart_simplex<F: FnMut(&[f64]) -> f64>(t: &mut Tracer<F>, s: &SearchConfig) -> bool {
    let d = s.dim();
    let m = s.starts.unwrap_or((2 * d).max(3));
    let starts = latin_hypercube(&s.lo, &s.hi, m, s.seed);
    let mut best: Option<(f64, bool)> = None;
    for x0 in starts {
        if let Some((v, conv)) = nelder_mead(t, s, x0) {
            if best.is_none_or(|b| v > b.0) {
                best = Some((v, conv));
            }
        }
    }
    best.is_some_and(|b| b.1)
}

/// One Nelder–Mead run maximizing `f`; returns the best value and whether
/// the spread criterion was met.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    t: &mut Tracer<F>,
    s: &SearchConfig,
    x0: Vec<f64>,
) -> Option<(f64, bool)> {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = -t.eval(&x0);
    simplex.push((x0.clone(), v0));
    for j in 0..d {
        let step = 0.1 * (s.hi[j] - s.lo[j]);
        let mut x = x0.clone();
        x[j] = if x[j] + step <= s.hi[j] { x[j] + step } else { x[j] - step };
        let v = -t.eval(&x);
        simplex.push((x, v));
    }
    if simplex.iter().all(|p| p.1 == f64::INFINITY) {
        return None;
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    let mut converged = false;
    for _ in 0..s.max_iter {
        simplex.sort_by(by_value);
        let spread = simplex[d].1 - simplex[0].1;
        if spread.is_finite() && spread < s.simplex_tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; d];
        for p in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(&p.0) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + coef * (c - w)).collect();
            s.clamp(&mut x);
            x
        };
        let xr = along(1.0);
        let fr = -t.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = -t.eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(0.5);
            let v = -t.eval(&x);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = -t.eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for p in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let v = -t.eval(&x);
            *p = (x, v);
        }
    }
    simplex.sort_by(by_value);
    Some((-simplex[0].1, converged))
}
