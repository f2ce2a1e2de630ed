use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::ppm::{ppm_error_prob, ppm_trial, PpmSpec};
use crate::error::{out_of_range, Error, Result};
use crate::exec::{try_map_trials, Run};
use crate::jscc::{dball_encode, BlockSource, HitProfile, LossyCodebook};
use crate::rate_distortion::{RdSolution, SourceModel};
use crate::rng::{Purpose, TrialSeeds};
use crate::stats::{proportion, Accumulator, Estimate};
use crate::vlf::MessagePrior;

/// Largest message set for which the separated bound is summed term by term.
pub const MAX_BOUND_MESSAGES: usize = 1 << 20;
/// Largest block length for exact d-ball probabilities.
pub const MAX_LOSSY_BLOCK: usize = 12;

/// Payload energy: one value, or one value per length level `floor(log2 i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Constant(f64),
    Schedule(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Every message stays within the total.
    Max,
    /// Only the expected energy stays within the total.
    Average,
}

/// Energy split between the length header and the index inside its group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub total: f64,
    pub header: f64,
    pub payload: Payload,
}

impl EnergyBudget {
    pub fn split(total: f64, payload: f64, header: f64) -> Self {
        Self {
            total,
            header,
            payload: Payload::Constant(payload),
        }
    }

    pub fn payload_at(&self, level: u32) -> f64 {
        match &self.payload {
            Payload::Constant(e) => *e,
            Payload::Schedule(s) => s[level as usize],
        }
    }

    /// Rejects negative energies, short schedules and totals that are exceeded under `mode`.
    pub fn check(&self, prior: &MessagePrior, mode: PowerMode) -> Result<()> {
        let levels = header_values(prior.len() as u64) as usize;
        let payloads: &[f64] = match &self.payload {
            Payload::Constant(e) => std::slice::from_ref(e),
            Payload::Schedule(s) => {
                if s.len() < levels {
                    return Err(Error::Infeasible(format!(
                        "schedule has {} levels, {levels} needed",
                        s.len()
                    )));
                }
                s
            }
        };
        if let Some(&bad) = payloads
            .iter()
            .chain([&self.header])
            .find(|e| !(**e >= 0.0 && e.is_finite()))
        {
            return Err(out_of_range("energy", bad, "0 <= E < inf"));
        }
        let used = match mode {
            PowerMode::Max => payloads[..payloads.len().min(levels)]
                .iter()
                .cloned()
                .fold(0.0, f64::max),
            PowerMode::Average => (0..prior.len())
                .map(|m| prior.prob(m) * self.payload_at(level(m as u64 + 1)))
                .sum(),
        } + self.header;
        if used > self.total * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "energy {used} exceeds the budget {}",
                self.total
            )));
        }
        Ok(())
    }
}

/// `E1(l) = N0 (l ln 2 + offset)` for `l = 0..levels`.
pub fn affine_schedule(levels: u32, n0: f64, offset: f64) -> Vec<f64> {
    (0..levels)
        .map(|l| n0 * (l as f64 * LN_2 + offset))
        .collect()
}

/// Length level of 1-based index `i`.
pub fn level(i: u64) -> u32 {
    debug_assert!(i >= 1);
    63 - i.leading_zeros()
}

/// Number of header values, `floor(log2 M) + 1`.
pub fn header_values(messages: u64) -> u64 {
    level(messages) as u64 + 1
}

/// Size of the index group at `level` when only `messages` indices exist.
pub fn group_size(level: u32, messages: u64) -> u64 {
    let start = 1u64 << level;
    (1u64 << level).min(messages + 1 - start)
}

/// Error bound of the two-stage orthogonal scheme for a prior sorted by non-increasing probability.
///
/// The payload term uses the exact index `i`, or `1 / P(i)` when `weaken` is set.
pub fn vl_separated_error_bound(
    prior: &MessagePrior,
    budget: &EnergyBudget,
    n0: f64,
    mode: PowerMode,
    weaken: bool,
) -> Result<f64> {
    if !prior.is_sorted() {
        return Err(Error::Infeasible(
            "messages must be ordered by non-increasing probability".into(),
        ));
    }
    if prior.len() > MAX_BOUND_MESSAGES {
        return Err(Error::TooLarge {
            what: "message set",
            size: prior.len() as u64,
            limit: MAX_BOUND_MESSAGES as u64,
        });
    }
    budget.check(prior, mode)?;
    let messages = prior.len() as u64;
    let mut payload = 0.0;
    let mut last: Option<((f64, f64), f64)> = None;
    for m in 0..prior.len() {
        let p = prior.prob(m);
        if p == 0.0 {
            continue;
        }
        let i = m as u64 + 1;
        let arg = (
            budget.payload_at(level(i)),
            if weaken { 1.0 / p } else { i as f64 },
        );
        let e = match last {
            Some((key, e)) if key == arg => e,
            _ => ppm_error_prob(arg.0, arg.1, n0)?,
        };
        last = Some((arg, e));
        payload += p * e;
    }
    let header = ppm_error_prob(budget.header, header_values(messages) as f64, n0)?;
    Ok((payload + header).min(1.0))
}

/// Sends 1-based index `i` out of `messages`: header among the levels, then the offset inside the group.
///
/// Returns `(correct, energy)`; any wrong decision counts as an error.
fn send_index(
    i: u64,
    messages: u64,
    budget: &EnergyBudget,
    n0: f64,
    seeds: &TrialSeeds,
) -> Result<(bool, f64)> {
    let l = level(i);
    let header = PpmSpec::new(header_values(messages), budget.header, n0)?;
    let body = PpmSpec::new(group_size(l, messages), budget.payload_at(l), n0)?;
    let mut noise = seeds.stream(Purpose::Noise);
    let wrong = ppm_trial(&header, &mut noise) | ppm_trial(&body, &mut noise);
    Ok((!wrong, budget.header + budget.payload_at(l)))
}

/// Monte Carlo error rate and energy of a separated scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub error: Estimate,
    pub energy: Estimate,
    /// Source blocks with no codeword in their d-ball; zero for lossless schemes.
    pub miss: Estimate,
}

/// Lossless two-stage scheme driven by `prior`.
pub fn simulate_separated(
    prior: &MessagePrior,
    budget: &EnergyBudget,
    n0: f64,
    mode: PowerMode,
    run: Run,
) -> Result<EnergyStats> {
    budget.check(prior, mode)?;
    let messages = prior.len() as u64;
    let outcomes = try_map_trials(
        run.trials,
        run.workers,
        || (),
        |_, t| {
            let seeds = TrialSeeds::new(run.master, t);
            let m = prior.sample(&mut seeds.stream(Purpose::Message));
            send_index(m as u64 + 1, messages, budget, n0, &seeds)
        },
    )?;
    Ok(summarize(&outcomes, 0))
}

fn summarize(outcomes: &[(bool, f64)], misses: u64) -> EnergyStats {
    let mut energy = Accumulator::new();
    for o in outcomes {
        energy.push(o.1);
    }
    let n = outcomes.len() as u64;
    EnergyStats {
        error: proportion(outcomes.iter().filter(|o| !o.0).count() as u64, n),
        energy: energy.estimate(),
        miss: proportion(misses, n),
    }
}

/// The three pieces of the lossy two-stage bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossyEnergyBound {
    /// Average over source blocks of the index error at index `1 / P[ball]`.
    pub payload: f64,
    pub header: f64,
    /// Probability that no codeword lands in the d-ball.
    pub miss: f64,
}

impl LossyEnergyBound {
    pub fn total(&self) -> f64 {
        (self.payload + self.header + self.miss).min(1.0)
    }
}

fn lossy_setup(
    src: &SourceModel,
    rd: &RdSolution,
    k: usize,
    d: f64,
    messages: u64,
    budget: &EnergyBudget,
) -> Result<(BlockSource, HitProfile)> {
    if k > MAX_LOSSY_BLOCK {
        return Err(Error::TooLarge {
            what: "block length",
            size: k as u64,
            limit: MAX_LOSSY_BLOCK as u64,
        });
    }
    if messages == 0 {
        return Err(out_of_range("M", 0.0, "M >= 1"));
    }
    let Payload::Constant(e1) = budget.payload else {
        return Err(Error::Unsupported(
            "the lossy scheme takes a constant payload energy".into(),
        ));
    };
    if e1 + budget.header > budget.total * (1.0 + 1e-12) || e1 < 0.0 || budget.header < 0.0 {
        return Err(Error::Infeasible(format!(
            "E1 + E2 = {} exceeds the budget {}",
            e1 + budget.header,
            budget.total
        )));
    }
    let gen = rd.output_pmf().ok_or_else(|| {
        Error::Unsupported("exact ball probabilities need a discrete source".into())
    })?;
    let block = BlockSource::new(src, k)?;
    let profile = HitProfile::new(&block, gen, d)?;
    Ok((block, profile))
}

/// Error bound of the d-ball compressor followed by the two-stage orthogonal index code.
pub fn lossy_energy_error_bound(
    src: &SourceModel,
    rd: &RdSolution,
    k: usize,
    d: f64,
    messages: u64,
    budget: &EnergyBudget,
    n0: f64,
) -> Result<LossyEnergyBound> {
    let (_, profile) = lossy_setup(src, rd, k, d, messages, budget)?;
    let e1 = budget.payload_at(0);
    let mut payload = 0.0;
    for &(w, p) in &profile.types {
        payload += w * if p > 0.0 {
            ppm_error_prob(e1, (1.0 / p).max(1.0), n0)?
        } else {
            1.0
        };
    }
    Ok(LossyEnergyBound {
        payload: payload.min(1.0),
        header: ppm_error_prob(budget.header, header_values(messages) as f64, n0)?,
        miss: profile.miss_probability(messages),
    })
}

/// End-to-end run of the lossy scheme; failure means a miss or any wrong orthogonal decision.
pub fn simulate_lossy_energy(
    src: &SourceModel,
    rd: &RdSolution,
    k: usize,
    d: f64,
    messages: u64,
    budget: &EnergyBudget,
    n0: f64,
    run: Run,
) -> Result<EnergyStats> {
    let (block, _) = lossy_setup(src, rd, k, d, messages, budget)?;
    let gen = rd.output_pmf().expect("checked in setup");
    let size = usize::try_from(messages).map_err(|_| Error::TooLarge {
        what: "codebook",
        size: messages,
        limit: usize::MAX as u64,
    })?;
    let outcomes = try_map_trials(
        run.trials,
        run.workers,
        || (Vec::new(), Vec::new()),
        |(s, z), t| {
            let seeds = TrialSeeds::new(run.master, t);
            block.sample(&mut seeds.stream(Purpose::Source), s);
            let book = LossyCodebook::new(seeds.family_key(Purpose::SourceCodebook), gen, k, size)?;
            let (w, hit) = dball_encode(&block, s, &book, d, z);
            let (ok, energy) = send_index(w as u64 + 1, messages, budget, n0, &seeds)?;
            Ok((ok && hit, energy, hit))
        },
    )?;
    let misses = outcomes.iter().filter(|o| !o.2).count() as u64;
    let pairs: Vec<(bool, f64)> = outcomes.iter().map(|o| (o.0, o.1)).collect();
    Ok(summarize(&pairs, misses))
}
