use serde::{Deserialize, Serialize};

use crate::channels::Dmc;
use crate::error::{out_of_range, Error, Result};
use crate::exec::{try_map_trials, Workers};
use crate::rng::{Purpose, TrialSeeds};
use crate::stats::{proportion, Accumulator, Estimate};

use super::codebook::LazyCodebook;
use super::prior::MessagePrior;

/// Hard cap on channel uses in one trial.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Largest message set a full decoder will track.
pub const MAX_FULL_MESSAGES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tracks every message and decodes.
    FullDecoder,
    /// Tracks only the transmitted message; its stopping time bounds the decoder's.
    TruePath,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FullDecoder => "full_decoder",
            Mode::TruePath => "true_path",
        }
    }
}

/// Stopping and decoding rule of the zero-error code with termination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VlftRule {
    /// Stop once the true message strictly beats every other score; decode the argmax.
    #[default]
    Map,
    /// Stop once the true message strictly beats every earlier index; decode the
    /// largest index that beats all earlier ones. Needs a non-increasing prior.
    Prefix,
}

/// Outcome of one simulated transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub trial: u64,
    pub mode: Mode,
    pub message: usize,
    pub decoded: Option<usize>,
    /// Channel uses until the stop.
    pub tau: u64,
    pub error: Option<bool>,
    /// `exp(-gamma)` in true-path mode, where no decision is simulated.
    pub error_bound: Option<f64>,
    /// Sum of information densities along the transmitted codeword up to `tau`.
    pub info_sum: f64,
    /// Decoder disagreed with the message although the stopping rule fired for it.
    pub anomaly: bool,
}

/// Reusable buffers for one worker.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    scores: Vec<f64>,
    column: Vec<u16>,
    density: Vec<f64>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(out_of_range("gamma", gamma, "0 < gamma < inf"));
    }
    Ok(())
}

fn check_full(prior: &MessagePrior) -> Result<()> {
    if prior.len() > MAX_FULL_MESSAGES {
        return Err(Error::TooLarge {
            what: "messages tracked by full decoder",
            size: prior.len() as u64,
            limit: MAX_FULL_MESSAGES as u64,
        });
    }
    Ok(())
}

/// Densities `i(x; y)` for every input `x` at a fixed output.
#[inline]
fn fill_density(dmc: &Dmc, y: usize, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..dmc.n_inputs()).map(|x| dmc.density_raw(x, y)));
}

/// Threshold code with personalized thresholds: message `m` is declared once its
/// accumulated density minus `ln 1/P(m)` reaches `gamma`.
#[derive(Debug, Clone)]
pub struct StopFeedbackCode<'a> {
    pub dmc: &'a Dmc,
    pub prior: &'a MessagePrior,
    pub gamma: f64,
    pub cap: u64,
}

impl<'a> StopFeedbackCode<'a> {
    pub fn new(dmc: &'a Dmc, prior: &'a MessagePrior, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            dmc,
            prior,
            gamma,
            cap: DEFAULT_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn trial(
        &self,
        mode: Mode,
        seeds: TrialSeeds,
        scratch: &mut Scratch,
    ) -> Result<Transcript> {
        let message = self.prior.sample(&mut seeds.stream(Purpose::Message));
        self.send(message, mode, seeds, scratch)
    }

    /// Transmits a message chosen by the caller, e.g. a source encoder's output.
    pub fn send(
        &self,
        message: usize,
        mode: Mode,
        seeds: TrialSeeds,
        scratch: &mut Scratch,
    ) -> Result<Transcript> {
        let (dmc, prior, gamma) = (self.dmc, self.prior, self.gamma);
        let mut noise = seeds.stream(Purpose::Noise);
        let book = LazyCodebook::new(seeds.family_key(Purpose::ChannelCodebook), dmc.caid())?;
        let mut info_sum = 0.0;
        let mut tau = 0u64;
        let decoded = match mode {
            Mode::TruePath => {
                let offset = prior.self_info(message);
                while info_sum - offset < gamma {
                    tau += 1;
                    if tau > self.cap {
                        return Err(Error::NonTerminating { cap: self.cap });
                    }
                    let x = book.symbol(message, tau);
                    let y = dmc.step(x, &mut noise);
                    info_sum += dmc.density_raw(x, y);
                }
                None
            }
            Mode::FullDecoder => {
                check_full(prior)?;
                let m_count = prior.len();
                let Scratch {
                    scores,
                    column,
                    density,
                } = scratch;
                scores.clear();
                scores.extend((0..m_count).map(|m| -prior.self_info(m)));
                let mut hit = scores.iter().position(|&s| s >= gamma);
                while hit.is_none() {
                    tau += 1;
                    if tau > self.cap {
                        return Err(Error::NonTerminating { cap: self.cap });
                    }
                    book.column_into(tau, m_count, column);
                    let x = column[message] as usize;
                    let y = dmc.step(x, &mut noise);
                    fill_density(dmc, y, density);
                    info_sum += density[x];
                    for (s, &c) in scores.iter_mut().zip(column.iter()) {
                        *s += density[c as usize];
                    }
                    // Smallest crossing index wins ties.
                    hit = scores.iter().position(|&s| s >= gamma);
                }
                hit
            }
        };
        Ok(Transcript {
            trial: seeds.trial,
            mode,
            message,
            decoded,
            tau,
            error: decoded.map(|d| d != message),
            error_bound: (mode == Mode::TruePath).then(|| (-gamma).exp()),
            info_sum,
            anomaly: false,
        })
    }

    pub fn run(
        &self,
        mode: Mode,
        master: u64,
        trials: u64,
        workers: Workers,
    ) -> Result<Vec<Transcript>> {
        try_map_trials(trials, workers, Scratch::default, |s, t| {
            self.trial(mode, TrialSeeds::new(master, t), s)
        })
    }
}

/// One trial of the threshold code; see [`StopFeedbackCode`].
pub fn stop_feedback_trial(
    dmc: &Dmc,
    prior: &MessagePrior,
    gamma: f64,
    mode: Mode,
    seeds: TrialSeeds,
) -> Result<Transcript> {
    StopFeedbackCode::new(dmc, prior, gamma)?.trial(mode, seeds, &mut Scratch::default())
}

/// Zero-error code with a termination signal driven by the transmitter.
#[derive(Debug, Clone)]
pub struct VlftCode<'a> {
    pub dmc: &'a Dmc,
    pub prior: &'a MessagePrior,
    pub rule: VlftRule,
    pub cap: u64,
}

impl<'a> VlftCode<'a> {
    pub fn new(dmc: &'a Dmc, prior: &'a MessagePrior, rule: VlftRule) -> Result<Self> {
        check_full(prior)?;
        if rule == VlftRule::Prefix && !prior.is_sorted() {
            return Err(Error::Infeasible(
                "prefix rule needs messages ordered by non-increasing probability".into(),
            ));
        }
        Ok(Self {
            dmc,
            prior,
            rule,
            cap: DEFAULT_CAP,
        })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    fn stopped(&self, scores: &[f64], message: usize) -> bool {
        let own = scores[message];
        match self.rule {
            VlftRule::Map => scores
                .iter()
                .enumerate()
                .all(|(j, &s)| j == message || own > s),
            VlftRule::Prefix => scores[..message].iter().all(|&s| own > s),
        }
    }

    fn decide(&self, scores: &[f64]) -> usize {
        match self.rule {
            VlftRule::Map => {
                let mut best = 0;
                for (j, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = j;
                    }
                }
                best
            }
            VlftRule::Prefix => {
                let mut running = f64::NEG_INFINITY;
                let mut last = 0;
                for (j, &s) in scores.iter().enumerate() {
                    if s > running {
                        last = j;
                        running = s;
                    }
                }
                last
            }
        }
    }

    pub fn trial(&self, seeds: TrialSeeds, scratch: &mut Scratch) -> Result<Transcript> {
        let message = self.prior.sample(&mut seeds.stream(Purpose::Message));
        self.send(message, seeds, scratch)
    }

    /// Transmits a message chosen by the caller.
    pub fn send(
        &self,
        message: usize,
        seeds: TrialSeeds,
        scratch: &mut Scratch,
    ) -> Result<Transcript> {
        let (dmc, prior) = (self.dmc, self.prior);
        let mut noise = seeds.stream(Purpose::Noise);
        let book = LazyCodebook::new(seeds.family_key(Purpose::ChannelCodebook), dmc.caid())?;
        let m_count = prior.len();
        let Scratch {
            scores,
            column,
            density,
        } = scratch;
        scores.clear();
        scores.extend((0..m_count).map(|m| -prior.self_info(m)));
        let mut info_sum = 0.0;
        let mut tau = 0u64;
        while !self.stopped(scores, message) {
            tau += 1;
            if tau > self.cap {
                return Err(Error::NonTerminating { cap: self.cap });
            }
            book.column_into(tau, m_count, column);
            let x = column[message] as usize;
            let y = dmc.step(x, &mut noise);
            fill_density(dmc, y, density);
            info_sum += density[x];
            for (s, &c) in scores.iter_mut().zip(column.iter()) {
                *s += density[c as usize];
            }
        }
        let decoded = self.decide(scores);
        Ok(Transcript {
            trial: seeds.trial,
            mode: Mode::FullDecoder,
            message,
            decoded: Some(decoded),
            tau,
            error: Some(decoded != message),
            error_bound: None,
            info_sum,
            anomaly: decoded != message,
        })
    }

    pub fn run(&self, master: u64, trials: u64, workers: Workers) -> Result<Vec<Transcript>> {
        try_map_trials(trials, workers, Scratch::default, |s, t| {
            self.trial(TrialSeeds::new(master, t), s)
        })
    }
}

/// One trial of the zero-error code under `rule`.
pub fn vlft_trial(
    dmc: &Dmc,
    prior: &MessagePrior,
    rule: VlftRule,
    seeds: TrialSeeds,
) -> Result<Transcript> {
    VlftCode::new(dmc, prior, rule)?.trial(seeds, &mut Scratch::default())
}

/// Monte Carlo value of the expected-length sum and its last summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumEstimate {
    pub length: Estimate,
    pub tail: f64,
    pub n_max: u64,
}

/// Estimates `sum_{n=0}^{n_max} E[min(1, exp(i_W(W) - i(X^n; Y^n)))]` from true-path runs only.
pub fn vlft_length_via_sum(
    dmc: &Dmc,
    prior: &MessagePrior,
    master: u64,
    trials: u64,
    n_max: u64,
    workers: Workers,
) -> Result<SumEstimate> {
    let caid = dmc.caid();
    let rows = try_map_trials(
        trials,
        workers,
        || (),
        |_, t| {
            let seeds = TrialSeeds::new(master, t);
            let message = prior.sample(&mut seeds.stream(Purpose::Message));
            let mut noise = seeds.stream(Purpose::Noise);
            let book = LazyCodebook::new(seeds.family_key(Purpose::ChannelCodebook), caid)?;
            let offset = prior.self_info(message);
            let mut info = 0.0;
            let mut total = 0.0;
            let mut last = 1.0;
            for n in 0..=n_max {
                if n > 0 {
                    let x = book.symbol(message, n);
                    let y = dmc.step(x, &mut noise);
                    info += dmc.density_raw(x, y);
                }
                last = (offset - info).min(0.0).exp();
                total += last;
            }
            Ok((total, last))
        },
    )?;
    let length: Accumulator = rows.iter().map(|r| r.0).collect();
    let tail: Accumulator = rows.iter().map(|r| r.1).collect();
    if tail.mean() > 1e-6 {
        return Err(Error::TailNotConverged {
            summand: tail.mean(),
            n_max,
        });
    }
    Ok(SumEstimate {
        length: length.estimate(),
        tail: tail.mean(),
        n_max,
    })
}

/// Batch statistics over transcripts from one code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub tau: Estimate,
    /// Absent for true-path batches.
    pub error: Option<Estimate>,
    pub info_sum: Estimate,
    /// Per-trial `info_sum - capacity * tau`, zero in mean by optional stopping.
    pub doob_gap: Estimate,
    pub anomalies: u64,
}

impl BatchSummary {
    pub fn new(transcripts: &[Transcript], capacity: f64) -> Self {
        let tau: Accumulator = transcripts.iter().map(|t| t.tau as f64).collect();
        let info: Accumulator = transcripts.iter().map(|t| t.info_sum).collect();
        let gap: Accumulator = transcripts
            .iter()
            .map(|t| t.info_sum - capacity * t.tau as f64)
            .collect();
        let decided: Vec<bool> = transcripts.iter().filter_map(|t| t.error).collect();
        let error = (!decided.is_empty() && decided.len() == transcripts.len()).then(|| {
            proportion(
                decided.iter().filter(|&&e| e).count() as u64,
                decided.len() as u64,
            )
        });
        Self {
            tau: tau.estimate(),
            error,
            info_sum: info.estimate(),
            doob_gap: gap.estimate(),
            anomalies: transcripts.iter().filter(|t| t.anomaly).count() as u64,
        }
    }
}
