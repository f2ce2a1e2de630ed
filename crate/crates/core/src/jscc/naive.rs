use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Result};
use crate::info::normal_tail_inv;
use crate::rate_distortion::RdSolution;

const GRID: usize = 4000;

/// Best split of the excess budget for a fixed-length interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBound {
    /// Channel uses.
    pub length: f64,
    /// Source-side excess probability.
    pub zeta: f64,
    /// Channel-side error probability.
    pub eta: f64,
}

/// Lower bound on the length of a separated scheme passing `ln M` nats through a
/// fixed-size interface, with the lower-order terms of both sides dropped.
///
/// Minimizes `(1 - eta) (k R + sqrt(k V) Qinv(zeta)) / C` over `eta + zeta = eps`
/// on a log-spaced `zeta` grid.
pub fn naive_separation_bound(
    k: u64,
    eps: f64,
    capacity: f64,
    rd: &RdSolution,
) -> Result<NaiveBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(out_of_range("eps", eps, "0 < eps < 1"));
    }
    if !(capacity > 0.0) {
        return Err(out_of_range("capacity", capacity, "C > 0"));
    }
    let k = k as f64;
    let spread = (k * rd.dispersion).sqrt();
    let length = |zeta: f64| -> Result<f64> {
        let eta = eps - zeta;
        let source = if spread == 0.0 {
            k * rd.rate
        } else {
            k * rd.rate + spread * normal_tail_inv(zeta)?
        };
        Ok((1.0 - eta) * source / capacity)
    };
    if spread == 0.0 {
        // Without dispersion the whole budget goes to the channel.
        return Ok(NaiveBound {
            length: (1.0 - eps) * k * rd.rate / capacity,
            zeta: 0.0,
            eta: eps,
        });
    }
    let (lo, hi) = ((eps * 1e-15).ln(), (eps * (1.0 - 1e-12)).ln());
    let mut best = NaiveBound {
        length: f64::INFINITY,
        zeta: eps,
        eta: 0.0,
    };
    for i in 0..=GRID {
        let zeta = (lo + (hi - lo) * i as f64 / GRID as f64).exp();
        let l = length(zeta)?;
        if l < best.length {
            best = NaiveBound {
                length: l,
                zeta,
                eta: eps - zeta,
            };
        }
    }
    Ok(best)
}
