//! Probability vectors and the information quantities built on them.
//!
//! Everything here is in nats. Conversion to bits happens only when results
//! leave the process (see [`crate::harness`]).

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::channels::Dmc;
use crate::error::{out_of_range, Error, Result};

const PMF_TOLERANCE: f64 = 1e-12;

/// A probability mass function over `0..len()`.
///
/// The cumulative sums are cached so that sampling is a binary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
    #[serde(skip)]
    cdf: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidPmf(format!("entry {i} = {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidPmf(format!("sum = {total}")));
        }
        Ok(Self::from_parts(probs))
    }

    /// Normalizes non-negative weights into a pmf.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPmf(format!("weights sum to {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf needs a non-empty alphabet");
        Self::from_parts(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n);
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self::from_parts(probs)
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p])
    }

    fn from_parts(probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // The last bucket absorbs rounding so that every u < 1 maps somewhere.
        if let Some(last) = cdf.last_mut() {
            *last = f64::INFINITY;
        }
        Self { probs, cdf }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Inverse-CDF lookup for `u` in `[0, 1)`. Zero-probability entries are never returned.
    pub fn quantile(&self, u: f64) -> usize {
        let mut i = self.cdf.partition_point(|&c| c <= u);
        while self.probs[i] == 0.0 && i + 1 < self.probs.len() {
            i += 1;
        }
        i
    }

    pub fn is_uniform(&self) -> bool {
        let target = 1.0 / self.len() as f64;
        self.probs.iter().all(|p| (p - target).abs() < 1e-12)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] >= w[1])
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// An information quantity in nats, possibly minus infinity.
///
/// Minus infinity arises from zero-probability channel transitions; it is
/// carried as its own variant rather than a magic number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfoValue {
    Finite(f64),
    NegInfinite,
}

impl InfoValue {
    pub fn from_nats(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            InfoValue::NegInfinite
        } else {
            InfoValue::Finite(x)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            InfoValue::Finite(x) => Some(x),
            InfoValue::NegInfinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, InfoValue::Finite(_))
    }

    /// IEEE value in nats; the infinite variant maps to `f64::NEG_INFINITY`.
    pub fn nats(self) -> f64 {
        match self {
            InfoValue::Finite(x) => x,
            InfoValue::NegInfinite => f64::NEG_INFINITY,
        }
    }

    pub fn bits(self) -> f64 {
        self.nats() / LN_2
    }
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

pub fn entropy(p: &Pmf) -> InfoValue {
    InfoValue::Finite(-p.probs().iter().map(|&q| xlogx(q)).sum::<f64>())
}

/// Variance of the self-information `-ln p(S)`, in nats squared.
pub fn varentropy(p: &Pmf) -> f64 {
    let h = entropy(p).nats();
    p.probs()
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * (-q.ln() - h).powi(2))
        .sum()
}

/// Binary entropy function in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

/// `ln(W(y|x) / P*_Y(y))` relative to the channel's capacity-achieving output law.
pub fn info_density(dmc: &Dmc, x: usize, y: usize) -> Result<InfoValue> {
    let q = dmc.caod().get(y);
    if q <= 0.0 {
        return Err(Error::UnreachableOutput(y));
    }
    let w = dmc.transition(x, y);
    Ok(if w > 0.0 {
        InfoValue::Finite((w / q).ln())
    } else {
        InfoValue::NegInfinite
    })
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal complementary CDF, `Q(x) = P[Z > x]`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF computed without cancellation in either tail.
pub fn normal_cdf(x: f64) -> f64 {
    normal_tail(-x)
}

/// Inverse of [`normal_tail`] on `(0, 1)`.
pub fn normal_tail_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(out_of_range("p", p, "0 < p < 1"));
    }
    let mut x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step on Q(x) - p; Q' = -phi.
    let pdf = normal_pdf(x);
    if pdf > 0.0 {
        x += (normal_tail(x) - p) / pdf;
    }
    Ok(x)
}

/// `E[Z 1{Z > Q^{-1}(eps)}]` for a standard normal `Z`, i.e. `phi(Q^{-1}(eps))`.
///
/// The endpoints are handled as limits: both `eps = 0` and `eps = 1` give 0.
pub fn truncated_normal_mean(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(out_of_range("eps", eps, "0 <= eps <= 1"));
    }
    if eps == 0.0 || eps == 1.0 {
        return Ok(0.0);
    }
    Ok(normal_pdf(normal_tail_inv(eps)?))
}
