//! Kernels, the Nadaraya–Watson smoother and kernel density estimates.

use crate::math::{exp, powf, sqrt, HALF_LN_2PI, PI};
use crate::{Error, Result};

/// Sums below this are treated as an empty neighborhood.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Kernel shape. Both are symmetric and integrate to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl KernelFamily {
    /// `K(u)` for the standardized argument `u`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => exp(-0.5 * u * u) / sqrt(2.0 * PI),
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `log K(u)`; `-∞` outside a compact support.
    #[inline]
    pub fn log_eval(self, u: f64) -> f64 {
        match self {
            KernelFamily::Gaussian => -0.5 * u * u - HALF_LN_2PI,
            KernelFamily::Epanechnikov => crate::math::ln(self.eval(u)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Epanechnikov => "epanechnikov",
        }
    }
}

impl core::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "epanechnikov" => Ok(KernelFamily::Epanechnikov),
            other => Err(Error::invalid(alloc::format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A kernel family with its bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(alloc::format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `K(u/h)`, not divided by `h`.
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.family.eval(u / self.bandwidth)
    }

    /// `log K(u/h)`.
    #[inline]
    pub fn log_eval(&self, u: f64) -> f64 {
        self.family.log_eval(u / self.bandwidth)
    }
}

/// Nadaraya–Watson estimate of `E(y | x = t)`.
pub fn nw_regress(xs: &[f64], ys: &[f64], spec: &KernelSpec, t: f64) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension { expected: xs.len(), got: ys.len() });
    }
    if xs.is_empty() {
        return Err(Error::EmptyNeighborhood(t));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let w = spec.eval(x - t);
        num += w * y;
        den += w;
    }
    if den < DENOMINATOR_FLOOR {
        return Err(Error::EmptyNeighborhood(t));
    }
    Ok(num / den)
}

/// Kernel density estimate at `t`.
///
/// With `exclude = Some(i)` this is the leave-one-out form
/// `(n−1)⁻¹ Σ_{j≠i} h⁻¹K((Y_j − t)/h)`; otherwise the sum runs over all points
/// and divides by `n`.
pub fn nw_density(ys: &[f64], spec: &KernelSpec, t: f64, exclude: Option<usize>) -> Result<f64> {
    let n = ys.len();
    let count = match exclude {
        Some(i) if i >= n || n < 2 => {
            return Err(Error::invalid("leave-one-out density needs n >= 2 and a valid index"))
        }
        Some(_) => n - 1,
        None if n == 0 => return Err(Error::VanishingDensity(t)),
        None => n,
    };
    let sum: f64 = ys
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != exclude)
        .map(|(_, y)| spec.eval(y - t))
        .sum();
    let p = sum / (count as f64 * spec.bandwidth());
    if p <= 0.0 {
        return Err(Error::VanishingDensity(t));
    }
    Ok(p)
}

/// Sample standard deviation with the `n − 1` divisor.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    sqrt(ss / (n - 1.0))
}

/// Rule-of-thumb bandwidth `1.06 · sd · n^(-1/5)`.
pub fn bandwidth_rule(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::DegenerateSample("bandwidth rule needs n >= 2"));
    }
    let sd = sample_sd(values);
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::DegenerateSample("zero variance"));
    }
    Ok(1.06 * sd * powf(values.len() as f64, -0.2))
}
