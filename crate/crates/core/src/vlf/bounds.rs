use crate::error::{out_of_range, Result};
use crate::rate_distortion::{source_expansion, RdSolution};

fn check_capacity(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(out_of_range("capacity", c, "C > 0"));
    }
    Ok(())
}

/// Expected-length bound of the threshold code: `(H + ln 1/eps + a0) / C` channel uses.
pub fn stop_feedback_length_bound(entropy: f64, eps: f64, capacity: f64, a0: f64) -> Result<f64> {
    check_capacity(capacity)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(out_of_range("eps", eps, "0 < eps < 1"));
    }
    Ok((entropy + (1.0 / eps).ln() + a0) / capacity)
}

/// The same bound for `M` equiprobable messages, with `ln M` in place of the entropy.
pub fn equiprobable_length_bound(messages: u64, eps: f64, capacity: f64, a0: f64) -> Result<f64> {
    stop_feedback_length_bound((messages.max(1) as f64).ln(), eps, capacity, a0)
}

/// Smallest length of a code with stop feedback carrying `rate` nats: `rate / C`.
pub fn vlf_converse_from_rate(rate: f64, capacity: f64) -> Result<f64> {
    check_capacity(capacity)?;
    Ok(rate.max(0.0) / capacity)
}

/// Smallest `l >= 0` with `C l + ln(l + 1) + 1 >= rate`.
pub fn vlft_converse_from_rate(rate: f64, capacity: f64) -> Result<f64> {
    check_capacity(capacity)?;
    let lhs = |l: f64| capacity * l + (l + 1.0).ln() + 1.0;
    if lhs(0.0) >= rate {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, rate / capacity);
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if lhs(mid) >= rate {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Converse length for `k` source samples at excess probability `eps`, using the
/// two-term source expansion as the rate.
pub fn vlf_converse_length(k: u64, eps: f64, rd: &RdSolution, capacity: f64) -> Result<f64> {
    vlf_converse_from_rate(source_expansion(k, eps, rd)?, capacity)
}

/// As [`vlf_converse_length`] for codes with termination.
pub fn vlft_converse_length(k: u64, eps: f64, rd: &RdSolution, capacity: f64) -> Result<f64> {
    vlft_converse_from_rate(source_expansion(k, eps, rd)?, capacity)
}
