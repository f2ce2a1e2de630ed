use crate::error::{out_of_range, Result};
use crate::info::{normal_tail, normal_tail_inv};
use crate::quadrature::integrate;
use crate::rng::RngStream;

/// Largest alphabet for which [`ppm_trial`] draws every coordinate.
pub const MAX_MATERIALIZED: u64 = 1 << 16;

const QUAD_TOL: f64 = 1e-13;
const HALF_WIDTH: f64 = 12.0;

/// Orthogonal signalling: message `j` sends `sqrt(E)` on coordinate `j` and nothing elsewhere.
///
/// Only the `m` coordinates spanned by the codebook are represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpmSpec {
    pub messages: u64,
    pub energy: f64,
    pub n0: f64,
}

impl PpmSpec {
    pub fn new(messages: u64, energy: f64, n0: f64) -> Result<Self> {
        if messages == 0 {
            return Err(out_of_range("m", 0.0, "m >= 1"));
        }
        check_energy(energy, n0)?;
        Ok(Self {
            messages,
            energy,
            n0,
        })
    }

    pub fn error_prob(&self) -> f64 {
        ppm_error_prob(self.energy, self.messages as f64, self.n0).expect("validated spec")
    }
}

fn check_energy(energy: f64, n0: f64) -> Result<()> {
    if !(energy >= 0.0) || !energy.is_finite() {
        return Err(out_of_range("E", energy, "0 <= E < inf"));
    }
    if !(n0 > 0.0) {
        return Err(out_of_range("N0", n0, "N0 > 0"));
    }
    Ok(())
}

/// ML error probability of orthogonal signalling with `m` codewords of energy `E`.
///
/// `m` may be any real `>= 1`; the integrand is `phi(u) (1 - (1 - Q(u + a))^(m - 1))`
/// with `a = sqrt(2 E / N0)`, evaluated through `expm1`/`ln_1p` so large `m` stays stable.
pub fn ppm_error_prob(energy: f64, m: f64, n0: f64) -> Result<f64> {
    check_energy(energy, n0)?;
    if !(m >= 1.0) {
        return Err(out_of_range("m", m, "m >= 1"));
    }
    if m == 1.0 {
        return Ok(0.0);
    }
    if energy == 0.0 {
        return Ok(1.0 - 1.0 / m);
    }
    let a = (2.0 * energy / n0).sqrt();
    let others = m - 1.0;
    let f = |u: f64| {
        let q = normal_tail(u + a);
        let miss = -(others * (-q).ln_1p()).exp_m1();
        (-0.5 * u * u).exp() * miss
    };
    // The correct coordinate's noise beyond |u| = 12 carries < 1e-32 mass.
    let r = integrate(
        f,
        -HALF_WIDTH,
        HALF_WIDTH,
        QUAD_TOL * (2.0 * std::f64::consts::PI).sqrt(),
    );
    Ok((r.value / (2.0 * std::f64::consts::PI).sqrt()).clamp(0.0, 1.0))
}

/// Largest of `count` standard normals, drawn by inverting the CDF of the maximum.
pub fn max_of_normals(count: u64, rng: &mut RngStream) -> f64 {
    debug_assert!(count >= 1);
    let u = rng.uniform().max(f64::MIN_POSITIVE);
    // P[max <= x] = (1 - Q(x))^count = u  =>  Q(x) = 1 - u^(1/count).
    let tail = -(u.ln() / count as f64).exp_m1();
    normal_tail_inv(tail.clamp(1e-300, 1.0 - 1e-16)).expect("clamped")
}

/// One transmission of message 0; `true` when the decoder picks another codeword.
///
/// Coordinates are drawn explicitly up to [`MAX_MATERIALIZED`]; beyond that the
/// competing coordinates are summarized by their maximum.
pub fn ppm_trial(spec: &PpmSpec, rng: &mut RngStream) -> bool {
    let sigma = (0.5 * spec.n0).sqrt();
    let own = spec.energy.sqrt() + sigma * rng.standard_normal();
    if spec.messages == 1 {
        return false;
    }
    let rival = if spec.messages <= MAX_MATERIALIZED {
        let mut best = f64::NEG_INFINITY;
        for _ in 1..spec.messages {
            best = best.max(sigma * rng.standard_normal());
        }
        best
    } else {
        sigma * max_of_normals(spec.messages - 1, rng)
    };
    // Ties have probability zero; resolve them against the sender.
    rival >= own
}
