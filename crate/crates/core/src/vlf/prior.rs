use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::info::{entropy, Pmf};
use crate::rng::RngStream;

/// Tail mass left over when a countable prior is cut to finite support.
pub const DEFAULT_TAIL: f64 = 1e-9;

/// Distribution of the message fed to a channel code. Messages are `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePrior {
    pmf: Pmf,
    self_info: Vec<f64>,
    tail_mass: f64,
}

/// Serializable description of a prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Uniform {
        m: u64,
    },
    Explicit {
        pmf: Vec<f64>,
    },
    /// `P(m) = (1 - ratio) ratio^m`, cut where the tail drops below `tail`.
    Geometric {
        ratio: f64,
        #[serde(default = "default_tail")]
        tail: f64,
    },
}

fn default_tail() -> f64 {
    DEFAULT_TAIL
}

impl PriorSpec {
    pub fn build(&self) -> Result<MessagePrior> {
        match self {
            PriorSpec::Uniform { m } => MessagePrior::uniform(*m as usize),
            PriorSpec::Explicit { pmf } => Ok(MessagePrior::explicit(Pmf::new(pmf.clone())?)),
            PriorSpec::Geometric { ratio, tail } => MessagePrior::geometric(*ratio, *tail),
        }
    }
}

impl MessagePrior {
    pub fn explicit(pmf: Pmf) -> Self {
        Self::with_tail(pmf, 0.0)
    }

    fn with_tail(pmf: Pmf, tail_mass: f64) -> Self {
        let self_info = pmf.probs().iter().map(|&p| -p.ln()).collect();
        Self {
            pmf,
            self_info,
            tail_mass,
        }
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(out_of_range("M", 0.0, "M >= 1"));
        }
        Ok(Self::explicit(Pmf::uniform(m)))
    }

    /// Geometric prior cut at the first `N` with tail mass `ratio^N <= tail`; the tail joins the last message.
    pub fn geometric(ratio: f64, tail: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(out_of_range("ratio", ratio, "0 < ratio < 1"));
        }
        if !(tail > 0.0 && tail < 1.0) {
            return Err(out_of_range("tail", tail, "0 < tail < 1"));
        }
        let n = (tail.ln() / ratio.ln()).ceil().max(1.0) as usize;
        if n > 1 << 24 {
            return Err(Error::TooLarge {
                what: "truncated prior support",
                size: n as u64,
                limit: 1 << 24,
            });
        }
        let mut probs: Vec<f64> = (0..n)
            .map(|m| (1.0 - ratio) * ratio.powi(m as i32))
            .collect();
        let tail_mass = ratio.powi(n as i32);
        *probs.last_mut().expect("n >= 1") += tail_mass;
        Ok(Self::with_tail(Pmf::from_weights(probs)?, tail_mass))
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn prob(&self, m: usize) -> f64 {
        self.pmf.get(m)
    }

    /// `ln 1/P(m)` in nats.
    #[inline]
    pub fn self_info(&self, m: usize) -> f64 {
        self.self_info[m]
    }

    /// Mass that was folded into the last message when truncating.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.pmf).nats()
    }

    pub fn is_sorted(&self) -> bool {
        self.pmf.is_non_increasing()
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        if self.pmf.len() == 1 {
            return 0;
        }
        self.pmf.quantile(rng.uniform())
    }
}
