use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{out_of_range, Error, Result};
use crate::info::normal_cdf;
use crate::quadrature::integrate;
use crate::rate_distortion::{RdSolution, SourceModel};

/// Largest number of source types enumerated for the exact law of the block tilted information.
pub const MAX_TYPES: usize = 1 << 20;

const GAMMA_GRID: usize = 2000;

/// Law of the block tilted information `J`, the sum of `k` per-letter values.
#[derive(Debug, Clone)]
pub enum TiltedLaw {
    /// Finite support `(value, probability)`.
    Atoms(Vec<(f64, f64)>),
    /// `J = k R + (X - k) / 2` with `X` chi-squared on `k` degrees of freedom.
    Gaussian { k: u64, rate: f64 },
}

impl TiltedLaw {
    pub fn new(src: &SourceModel, rd: &RdSolution, k: u64) -> Result<Self> {
        if k == 0 {
            return Err(out_of_range("k", 0.0, "k >= 1"));
        }
        match src {
            SourceModel::Gaussian { .. } => Ok(TiltedLaw::Gaussian { k, rate: rd.rate }),
            SourceModel::Discrete { pmf, .. } => {
                let letters: Vec<(f64, f64)> = pmf
                    .probs()
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(s, &p)| (rd.tilted(s), p))
                    .collect();
                let (lo, hi) = letters
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), l| {
                        (a.min(l.0), b.max(l.0))
                    });
                if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                    return Ok(TiltedLaw::Atoms(vec![(k as f64 * letters[0].0, 1.0)]));
                }
                Ok(TiltedLaw::Atoms(enumerate_types(&letters, k)?))
            }
        }
    }

    /// `P[J - G >= gamma]` for `G ~ N(mean, var)`; `var = 0` is a point mass.
    pub fn exceed(&self, mean: f64, var: f64, gamma: f64) -> f64 {
        let sd = var.sqrt();
        let below = |j: f64| {
            let slack = j - gamma - mean;
            if sd == 0.0 {
                if slack >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                normal_cdf(slack / sd)
            }
        };
        match self {
            TiltedLaw::Atoms(atoms) => atoms
                .iter()
                .map(|&(j, p)| p * below(j))
                .sum::<f64>()
                .min(1.0),
            TiltedLaw::Gaussian { k, rate } => {
                let chi = ChiSquared::new(*k as f64).expect("k >= 1");
                let kf = *k as f64;
                // J >= gamma + g  <=>  X >= k + 2 (gamma + g - k R)
                let sf = |g: f64| {
                    let x = kf + 2.0 * (gamma + g - kf * rate);
                    if x <= 0.0 {
                        1.0
                    } else {
                        chi.sf(x)
                    }
                };
                if sd == 0.0 {
                    return sf(mean);
                }
                let f = |u: f64| (-0.5 * u * u).exp() * sf(mean + sd * u);
                let r = integrate(f, -12.0, 12.0, 1e-12);
                (r.value / (2.0 * std::f64::consts::PI).sqrt()).clamp(0.0, 1.0)
            }
        }
    }
}

fn enumerate_types(letters: &[(f64, f64)], k: u64) -> Result<Vec<(f64, f64)>> {
    let a = letters.len();
    let count =
        (ln_gamma((k + a as u64) as f64) - ln_gamma(k as f64 + 1.0) - ln_gamma(a as f64)).exp();
    if count > MAX_TYPES as f64 * 1.000001 {
        return Err(Error::TooLarge {
            what: "source types",
            size: count.round() as u64,
            limit: MAX_TYPES as u64,
        });
    }
    let ln_k_fact = ln_gamma(k as f64 + 1.0);
    let mut out = Vec::with_capacity(count.round() as usize);
    let mut counts = vec![0u64; a];
    fn rec(
        at: usize,
        left: u64,
        counts: &mut [u64],
        letters: &[(f64, f64)],
        ln_k_fact: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        if at + 1 == counts.len() {
            counts[at] = left;
            let mut ln_p = ln_k_fact;
            let mut j = 0.0;
            for (&n, &(v, p)) in counts.iter().zip(letters) {
                ln_p += n as f64 * p.ln() - ln_gamma(n as f64 + 1.0);
                j += n as f64 * v;
            }
            out.push((j, ln_p.exp()));
            return;
        }
        for n in 0..=left {
            counts[at] = n;
            rec(at + 1, left - n, counts, letters, ln_k_fact, out);
        }
    }
    rec(0, k, &mut counts, letters, ln_k_fact, &mut out);
    Ok(out)
}

/// A converse value together with the threshold that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverseBound {
    pub eps: f64,
    pub gamma: f64,
}

/// Lower bound on the excess-distortion probability at threshold `gamma` for a
/// code spending energy `E`, with `G ~ N(E/N0, 2E/N0)` nats as the channel's information.
pub fn awgn_jscc_converse_at(law: &TiltedLaw, energy: f64, n0: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(out_of_range("gamma", gamma, "gamma > 0"));
    }
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(out_of_range("E", energy, "0 <= E < inf"));
    }
    if !(n0 > 0.0) {
        return Err(out_of_range("N0", n0, "N0 > 0"));
    }
    let snr = energy / n0;
    Ok(law.exceed(snr, 2.0 * snr, gamma) - (-gamma).exp())
}

/// Supremum of [`awgn_jscc_converse_at`] over a log-spaced threshold grid, floored at 0.
pub fn awgn_jscc_converse(
    src: &SourceModel,
    rd: &RdSolution,
    k: u64,
    energy: f64,
    n0: f64,
) -> Result<ConverseBound> {
    let law = TiltedLaw::new(src, rd, k)?;
    let snr = energy / n0;
    let spread = (k as f64 * rd.dispersion).sqrt() + (2.0 * snr).sqrt();
    let hi = (k as f64 * rd.rate + 12.0 * spread).max(50.0);
    let (a, b) = (1e-4f64.ln(), hi.ln());
    let mut best = ConverseBound {
        eps: 0.0,
        gamma: f64::NAN,
    };
    for i in 0..=GAMMA_GRID {
        let gamma = (a + (b - a) * i as f64 / GAMMA_GRID as f64).exp();
        let eps = awgn_jscc_converse_at(&law, energy, n0, gamma)?;
        if eps > best.eps {
            best = ConverseBound { eps, gamma };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use crate::rate_distortion::ba_rate_distortion;
    use crate::rng::seed_stream;

    fn fair() -> (SourceModel, RdSolution) {
        let src = SourceModel::binary_hamming(0.5).unwrap();
        let rd = ba_rate_distortion(&src, 0.11).unwrap();
        (src, rd)
    }

    #[test]
    fn no_energy_gives_near_one() {
        let (src, rd) = fair();
        let k = 100;
        let b = awgn_jscc_converse(&src, &rd, k, 0.0, 1.0).unwrap();
        let kr = k as f64 * rd.rate;
        assert!(b.gamma <= kr);
        assert!(b.eps > 1.0 - (-kr).exp() - 1e-2);
        assert!(b.eps > 0.99);
    }

    #[test]
    fn zero_dispersion_closed_form() {
        let (src, rd) = fair();
        let law = TiltedLaw::new(&src, &rd, 100).unwrap();
        assert!(matches!(&law, TiltedLaw::Atoms(a) if a.len() == 1));
        let kr = 100.0 * (std::f64::consts::LN_2 - binary_entropy(0.11));
        let (snr, gamma) = (90.0, 3.0);
        let closed = normal_cdf((kr - gamma - snr) / (2.0 * snr).sqrt()) - (-gamma).exp();
        assert!((awgn_jscc_converse_at(&law, snr, 1.0, gamma).unwrap() - closed).abs() < 1e-9);
    }

    #[test]
    fn second_order_energy_keeps_bound_small() {
        let (src, rd) = fair();
        let k = 100u64;
        let q = crate::info::normal_tail_inv(0.05).unwrap();
        let snr = k as f64 * rd.rate + (k as f64 * (2.0 * rd.rate + rd.dispersion)).sqrt() * q;
        let b = awgn_jscc_converse(&src, &rd, k, snr, 1.0).unwrap();
        assert!(b.eps <= 0.05, "{b:?}");
    }

    #[test]
    fn monotone_in_energy() {
        let src = SourceModel::binary_hamming(0.3).unwrap();
        let rd = ba_rate_distortion(&src, 0.1).unwrap();
        let mut prev = 1.0;
        for i in 0..30 {
            let b = awgn_jscc_converse(&src, &rd, 40, i as f64, 1.0).unwrap();
            assert!(b.eps <= prev + 1e-12);
            prev = b.eps;
        }
    }

    #[test]
    fn types_match_monte_carlo() {
        // Oracle: direct sampling of the block tilted information.
        let src = SourceModel::binary_hamming(0.3).unwrap();
        let rd = ba_rate_distortion(&src, 0.1).unwrap();
        let k = 30;
        let law = TiltedLaw::new(&src, &rd, k).unwrap();
        let (snr, gamma): (f64, f64) = (3.0, 1.0);
        let mut rng = seed_stream(8, 0);
        let n = 400_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let j: f64 = (0..k)
                .map(|_| rd.tilted(usize::from(rng.uniform() < 0.3)))
                .sum();
            let g = snr + (2.0 * snr).sqrt() * rng.standard_normal();
            hits += u64::from(j - g >= gamma);
        }
        let est = crate::stats::proportion(hits, n);
        assert!(est.near(law.exceed(snr, 2.0 * snr, gamma), 4.0));
    }

    #[test]
    fn gaussian_law_matches_monte_carlo() {
        let src = SourceModel::gaussian(1.0).unwrap();
        let rd = RdSolution::gaussian(1.0, 0.25).unwrap();
        let k = 20;
        let law = TiltedLaw::new(&src, &rd, k).unwrap();
        let (snr, gamma): (f64, f64) = (10.0, 0.5);
        let mut rng = seed_stream(9, 0);
        let n = 200_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let j: f64 = (0..k).map(|_| rd.tilted_real(rng.standard_normal())).sum();
            let g = snr + (2.0 * snr).sqrt() * rng.standard_normal();
            hits += u64::from(j - g >= gamma);
        }
        assert!(crate::stats::proportion(hits, n).near(law.exceed(snr, 2.0 * snr, gamma), 4.0));
    }

    #[test]
    fn rejects_bad_gamma() {
        let (src, rd) = fair();
        let law = TiltedLaw::new(&src, &rd, 4).unwrap();
        assert!(awgn_jscc_converse_at(&law, 1.0, 1.0, 0.0).is_err());
    }
}
