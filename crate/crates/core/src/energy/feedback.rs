use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Result};
use crate::exec::{map_trials, Run};
use crate::info::Pmf;
use crate::rng::{Purpose, RngStream, TrialSeeds};
use crate::stats::{proportion, Accumulator, Estimate};
use crate::vlf::MessagePrior;

/// Binary prefix code; `codewords[m]` is the bit string of message `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixCode {
    pub codewords: Vec<Vec<bool>>,
}

impl PrefixCode {
    pub fn lengths(&self) -> Vec<usize> {
        self.codewords.iter().map(Vec::len).collect()
    }

    pub fn mean_length(&self, pmf: &Pmf) -> f64 {
        self.codewords
            .iter()
            .zip(pmf.probs())
            .map(|(c, p)| p * c.len() as f64)
            .sum()
    }

    /// No codeword is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        let mut sorted: Vec<&Vec<bool>> = self.codewords.iter().collect();
        sorted.sort();
        sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
    }
}

#[derive(PartialEq)]
struct Node {
    weight: f64,
    id: usize,
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.id.cmp(&other.id))
    }
}

/// Huffman code; a single message gets the empty codeword.
pub fn huffman_code(pmf: &Pmf) -> PrefixCode {
    let n = pmf.len();
    if n == 1 {
        return PrefixCode {
            codewords: vec![Vec::new()],
        };
    }
    // Nodes 0..n are leaves; merged nodes get fresh ids and remember their children.
    let mut children: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
    let mut heap: BinaryHeap<Reverse<Node>> = pmf
        .probs()
        .iter()
        .enumerate()
        .map(|(id, &weight)| Reverse(Node { weight, id }))
        .collect();
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().expect("two nodes");
        let Reverse(b) = heap.pop().expect("two nodes");
        children.push((a.id, b.id));
        heap.push(Reverse(Node {
            weight: a.weight + b.weight,
            id: n + children.len() - 1,
        }));
    }
    let mut codewords = vec![Vec::new(); n];
    let mut stack = vec![(2 * n - 2, Vec::new())];
    while let Some((id, prefix)) = stack.pop() {
        if id < n {
            codewords[id] = prefix;
            continue;
        }
        let (l, r) = children[id - n];
        let mut left = prefix.clone();
        left.push(false);
        let mut right = prefix;
        right.push(true);
        stack.push((l, left));
        stack.push((r, right));
    }
    PrefixCode { codewords }
}

/// Channel slot of bit `b`'s `t`-th use when bits share the channel diagonally (both 1-based).
pub fn diagonal_slot(b: u64, t: u64) -> u64 {
    debug_assert!(b >= 1 && t >= 1);
    (b + t - 1) * (b + t - 2) / 2 + b
}

/// Result of sending one bit over the AWGN channel with feedback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitOutcome {
    pub delivered: bool,
    /// Receiver's posterior probability of being wrong.
    pub residual_error: f64,
    pub energy: f64,
    /// Channel uses spent on the bit.
    pub uses: u64,
}

pub trait BitTransmitter {
    fn send(&mut self, bit: bool, rng: &mut RngStream) -> BitOutcome;
}

/// Oracle for the optimal single-bit scheme: `N0 ln 2` per bit, never wrong.
#[derive(Debug, Clone, Copy)]
pub struct IdealBitTransmitter {
    pub n0: f64,
}

impl BitTransmitter for IdealBitTransmitter {
    fn send(&mut self, bit: bool, _rng: &mut RngStream) -> BitOutcome {
        BitOutcome {
            delivered: bit,
            residual_error: 0.0,
            energy: self.n0 * LN_2,
            uses: 1,
        }
    }
}

/// Antipodal repetition until the receiver's posterior reaches `1 - delta`.
#[derive(Debug, Clone, Copy)]
pub struct SprtBitTransmitter {
    pub n0: f64,
    /// Energy per use.
    pub step_energy: f64,
    pub delta: f64,
}

impl SprtBitTransmitter {
    pub fn new(n0: f64, step_energy: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(out_of_range("delta", delta, "0 < delta < 1/2"));
        }
        if !(step_energy > 0.0 && n0 > 0.0) {
            return Err(out_of_range(
                "step energy",
                step_energy,
                "positive energy and N0",
            ));
        }
        Ok(Self {
            n0,
            step_energy,
            delta,
        })
    }
}

impl BitTransmitter for SprtBitTransmitter {
    fn send(&mut self, bit: bool, rng: &mut RngStream) -> BitOutcome {
        let amp = self.step_energy.sqrt();
        let sigma = (0.5 * self.n0).sqrt();
        let threshold = ((1.0 - self.delta) / self.delta).ln();
        let sign = if bit { 1.0 } else { -1.0 };
        let mut llr: f64 = 0.0;
        let mut uses = 0;
        while llr.abs() < threshold {
            let y = sign * amp + sigma * rng.standard_normal();
            llr += 4.0 * amp * y / self.n0;
            uses += 1;
        }
        BitOutcome {
            delivered: llr > 0.0,
            residual_error: 1.0 / (1.0 + llr.abs().exp()),
            energy: uses as f64 * self.step_energy,
            uses,
        }
    }
}

/// One message through the Huffman code with bits on diagonal slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTrial {
    pub message: usize,
    pub correct: bool,
    pub energy: f64,
    pub bits: usize,
    /// Last channel slot used, 0 when nothing was sent.
    pub last_slot: u64,
}

/// Sends message `message` bit by bit; any wrong bit sends the decoder into another subtree.
pub fn vl_feedback_energy_trial<T: BitTransmitter>(
    code: &PrefixCode,
    message: usize,
    transmitter: &mut T,
    rng: &mut RngStream,
) -> EnergyTrial {
    let word = &code.codewords[message];
    let mut energy = 0.0;
    let mut correct = true;
    let mut last_slot = 0;
    for (b, &bit) in word.iter().enumerate() {
        let out = transmitter.send(bit, rng);
        energy += out.energy;
        correct &= out.delivered == bit;
        last_slot = last_slot.max(diagonal_slot(b as u64 + 1, out.uses));
    }
    EnergyTrial {
        message,
        correct,
        energy,
        bits: word.len(),
        last_slot,
    }
}

/// Batch statistics of the Huffman feedback pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackStats {
    pub error: Estimate,
    pub energy: Estimate,
    pub bits: Estimate,
    /// Mean codeword length of the Huffman code, bits.
    pub mean_length: f64,
}

/// Runs the pipeline with a fresh transmitter per trial from `make`.
pub fn simulate_feedback_energy<T, F>(
    prior: &MessagePrior,
    make: F,
    run: Run,
) -> Result<FeedbackStats>
where
    T: BitTransmitter,
    F: Fn() -> T + Sync + Send,
{
    let code = huffman_code(prior.pmf());
    let trials = map_trials(
        run.trials,
        run.workers,
        || (),
        |_, t| {
            let seeds = TrialSeeds::new(run.master, t);
            let m = prior.sample(&mut seeds.stream(Purpose::Message));
            vl_feedback_energy_trial(&code, m, &mut make(), &mut seeds.stream(Purpose::Noise))
        },
    )?;
    let (mut energy, mut bits) = (Accumulator::new(), Accumulator::new());
    for t in &trials {
        energy.push(t.energy);
        bits.push(t.bits as f64);
    }
    Ok(FeedbackStats {
        error: proportion(
            trials.iter().filter(|t| !t.correct).count() as u64,
            trials.len() as u64,
        ),
        energy: energy.estimate(),
        bits: bits.estimate(),
        mean_length: code.mean_length(prior.pmf()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::entropy;
    use crate::rng::seed_stream;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn huffman_examples() {
        let p = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        let c = huffman_code(&p);
        let mut l = c.lengths();
        l.sort();
        assert_eq!(l, vec![1, 2, 2]);
        assert_eq!(c.mean_length(&p), 1.5);
        let u = huffman_code(&Pmf::uniform(256));
        assert!(u.lengths().iter().all(|&x| x == 8));
        assert_eq!(
            huffman_code(&Pmf::uniform(1)).codewords,
            vec![Vec::<bool>::new()]
        );
    }

    #[test]
    fn huffman_matches_exhaustive_optimum() {
        // Oracle: minimum expected length over all Kraft-feasible length vectors up to 5 letters.
        let p = Pmf::new(vec![0.4, 0.2, 0.15, 0.15, 0.1]).unwrap();
        let mut best = f64::INFINITY;
        let n = p.len();
        let mut lens = vec![1usize; n];
        loop {
            let kraft: f64 = lens.iter().map(|&l| 0.5f64.powi(l as i32)).sum();
            if kraft <= 1.0 + 1e-12 {
                best = best.min(lens.iter().zip(p.probs()).map(|(&l, q)| l as f64 * q).sum());
            }
            let mut i = 0;
            while i < n && lens[i] == n {
                lens[i] = 1;
                i += 1;
            }
            if i == n {
                break;
            }
            lens[i] += 1;
        }
        assert!((huffman_code(&p).mean_length(&p) - best).abs() < 1e-12);
    }

    #[test]
    fn diagonal_examples() {
        assert_eq!(
            [
                diagonal_slot(1, 1),
                diagonal_slot(1, 2),
                diagonal_slot(1, 4)
            ],
            [1, 2, 7]
        );
        assert_eq!([diagonal_slot(2, 1), diagonal_slot(2, 3)], [3, 8]);
        assert_eq!(
            (1..=5).map(|t| diagonal_slot(1, t)).collect::<Vec<_>>(),
            vec![1, 2, 4, 7, 11]
        );
        assert_eq!(
            (1..=4).map(|t| diagonal_slot(2, t)).collect::<Vec<_>>(),
            vec![3, 5, 8, 12]
        );
        assert_eq!([diagonal_slot(3, 1), diagonal_slot(3, 2)], [6, 9]);
    }

    #[test]
    fn diagonal_injective() {
        let mut seen = HashSet::new();
        for b in 1..=1000 {
            for t in 1..=1000 {
                assert!(seen.insert(diagonal_slot(b, t)));
            }
        }
        // Slots 1..=N(N+1)/2 are exactly the anti-diagonals b + t <= N + 1.
        assert!((1..=500_500u64).all(|s| seen.contains(&s)));
    }

    #[test]
    fn ideal_pipeline_energy() {
        let n0 = 2.0;
        let p = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        let code = huffman_code(&p);
        let mut tx = IdealBitTransmitter { n0 };
        let mut rng = seed_stream(1, 0);
        for m in 0..3 {
            let t = vl_feedback_energy_trial(&code, m, &mut tx, &mut rng);
            assert!(t.correct);
            assert!((t.energy - code.codewords[m].len() as f64 * n0 * LN_2).abs() < 1e-12);
        }
        let single = huffman_code(&Pmf::uniform(1));
        assert_eq!(
            vl_feedback_energy_trial(&single, 0, &mut tx, &mut rng).energy,
            0.0
        );
    }

    #[test]
    fn sprt_transmitter_is_reliable_but_costly() {
        let mut tx = SprtBitTransmitter::new(1.0, 0.05, 1e-9).unwrap();
        let mut energy = 0.0;
        let n = 20_000;
        for t in 0..n {
            let bit = t % 2 == 0;
            let out = tx.send(bit, &mut seed_stream(5, t));
            assert_eq!(out.delivered, bit);
            assert!(out.residual_error <= 1e-9);
            energy += out.energy;
        }
        assert!(energy / n as f64 > LN_2);
    }

    #[test]
    fn batch_with_ideal_transmitter() {
        let prior = MessagePrior::explicit(Pmf::new(vec![0.5, 0.25, 0.25]).unwrap());
        let run = Run {
            master: 2,
            trials: 20_000,
            workers: crate::exec::Workers::SINGLE,
        };
        let s = simulate_feedback_energy(&prior, || IdealBitTransmitter { n0: 1.0 }, run).unwrap();
        assert_eq!(s.error.estimate, 0.0);
        assert!(s.energy.near(1.5 * LN_2, 4.0));
        assert!((s.energy.estimate - s.bits.estimate * LN_2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn huffman_bounds(w in proptest::collection::vec(0.01f64..1.0, 2..40)) {
            let p = Pmf::from_weights(w).unwrap();
            let c = huffman_code(&p);
            prop_assert!(c.is_prefix_free());
            let h = entropy(&p).bits();
            let l = c.mean_length(&p);
            prop_assert!(l >= h - 1e-9 && l < h + 1.0);
            let kraft: f64 = c.lengths().iter().map(|&l| 0.5f64.powi(l as i32)).sum();
            prop_assert!((kraft - 1.0).abs() < 1e-12);
        }
    }
}
