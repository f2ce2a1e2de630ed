//! Monte Carlo summaries and the small regressions used on them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Smallest trial count for which normal-approximation intervals are reported.
pub const MIN_TRIALS: u64 = 1000;

/// Running sums for a sample mean; merge order is the caller's responsibility.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            estimate: self.mean(),
            std_error: self.std_error(),
            ci95: Z95 * self.std_error(),
            n: self.n,
        }
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::new();
        iter.into_iter().for_each(|x| acc.push(x));
        acc
    }
}

/// A point estimate with its standard error and 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: f64,
    pub n: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            estimate: value,
            std_error: 0.0,
            ci95: 0.0,
            n: 0,
        }
    }

    /// True when `estimate <= bound + k * se`.
    pub fn below(&self, bound: f64, k: f64) -> bool {
        self.estimate <= bound + k * self.std_error
    }

    /// True when `|estimate - target| <= k * se`.
    pub fn near(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            estimate: self.estimate * c,
            std_error: self.std_error * c.abs(),
            ci95: self.ci95 * c.abs(),
            n: self.n,
        }
    }
}

/// Proportion estimate with the binomial standard error `sqrt(p(1-p)/n)`.
pub fn proportion(successes: u64, n: u64) -> Estimate {
    let p = successes as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    Estimate {
        estimate: p,
        std_error: se,
        ci95: Z95 * se,
        n,
    }
}

pub fn require_trials(n: u64) -> Result<()> {
    if n < MIN_TRIALS {
        return Err(Error::Infeasible(format!(
            "{n} trials is below the {MIN_TRIALS} needed for normal confidence intervals"
        )));
    }
    Ok(())
}

/// Weighted least squares fit with known observation variances.
#[derive(Debug, Clone)]
pub struct WlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl WlsFit {
    /// Two-sided z statistic for coefficient `i` against zero.
    pub fn z(&self, i: usize) -> f64 {
        self.coefficients[i] / self.std_errors[i]
    }

    /// Whether coefficient `i` is distinguishable from zero at the 95% level.
    pub fn significant95(&self, i: usize) -> bool {
        self.z(i).abs() > Z95
    }
}

/// Fits `y = X beta` with `Var(y_i) = variances[i]` taken as known.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], variances: &[f64]) -> Result<WlsFit> {
    let n = y.len();
    let p = design.first().map_or(0, Vec::len);
    if n != design.len() || n != variances.len() || p == 0 || n < p {
        return Err(Error::Infeasible(format!(
            "regression with {n} rows and {p} columns"
        )));
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j] / variances[i].sqrt());
    let yv = DVector::from_fn(n, |i, _| y[i] / variances[i].sqrt());
    let xtx = x.transpose() * &x;
    let cov = xtx
        .try_inverse()
        .ok_or_else(|| Error::Infeasible("singular regression design".into()))?;
    let beta = &cov * x.transpose() * yv;
    Ok(WlsFit {
        coefficients: beta.iter().copied().collect(),
        std_errors: (0..p).map(|i| cov[(i, i)].sqrt()).collect(),
    })
}
