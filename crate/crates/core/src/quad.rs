//! Composite trapezoid quadrature on a uniform grid.

use alloc::vec::Vec;

use crate::math::{ln, LogSumExp};
use crate::{Error, Result};

/// Default node count for base-measure quadrature.
pub const DEFAULT_POINTS: usize = 2001;

/// Uniform grid over `[lo, hi]` with `points` nodes, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    points: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::DegenerateSupport { lo, hi });
        }
        if points < 2 {
            return Err(Error::invalid("quadrature grid needs at least 2 points"));
        }
        Ok(Self { lo, hi, points })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    /// The `i`-th node. The last node is exactly `hi`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |i| self.node(i))
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.points {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    /// `∫ g` from values of `g` at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points);
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// `log ∫ exp(g)` from log-values at the nodes, with a max shift.
    pub fn log_integrate_exp(&self, log_values: &[f64]) -> f64 {
        debug_assert_eq!(log_values.len(), self.points);
        let mut acc = LogSumExp::new();
        for (i, v) in log_values.iter().enumerate() {
            acc.push(v + ln(self.weight(i)));
        }
        acc.value()
    }

    pub fn integrate_fn(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        let values: Vec<f64> = self.nodes().map(&mut g).collect();
        self.integrate(&values)
    }
}

/// Oriented composite trapezoid over the nodes `xs` (any order, any spacing).
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}
