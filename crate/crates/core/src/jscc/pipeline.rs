use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::lossy::{dball_encode, min_distortion_encode, BlockSource, HitProfile, LossyCodebook};
use crate::channels::Dmc;
use crate::error::{out_of_range, Error, Result};
use crate::exec::{try_map_trials, Run};
use crate::info::Pmf;
use crate::rate_distortion::{
    brute_force_deps_entropy, source_expansion, BlockAlphabet, RdSolution, SourceModel,
};
use crate::rng::{Purpose, RngStream, TrialSeeds};
use crate::stats::{proportion, Accumulator, Estimate};
use crate::vlf::{
    MessagePrior, Mode, Scratch, StopFeedbackCode, VlftCode, VlftRule, MAX_FULL_MESSAGES,
};

/// Largest codebook the excess pipeline will size (true-path channel beyond the full-decoder limit).
pub const MAX_EXCESS_CODEBOOK: u64 = 1 << 24;
/// Largest codebook the average-distortion pipeline materializes per trial.
pub const MAX_AVERAGE_CODEBOOK: u64 = 1 << 16;

/// How much of the excess budget the channel code may spend.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelBudget {
    /// `1 / sqrt(k)`.
    #[default]
    InvSqrtK,
    /// `eps / sqrt(k)`.
    EpsOverSqrtK,
    Fixed {
        value: f64,
    },
}

impl ChannelBudget {
    pub fn value(self, k: usize, eps: f64) -> f64 {
        let root = (k as f64).sqrt();
        match self {
            ChannelBudget::InvSqrtK => 1.0 / root,
            ChannelBudget::EpsOverSqrtK => eps / root,
            ChannelBudget::Fixed { value } => value,
        }
    }
}

/// Source, channel and distortion level shared by the three pipelines.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline<'a> {
    pub src: &'a SourceModel,
    pub dmc: &'a Dmc,
    pub rd: &'a RdSolution,
    pub k: usize,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    tau: u64,
    /// Per-letter distortion of the final reproduction.
    distortion: f64,
    failure: bool,
    miss: bool,
    channel_error: Option<bool>,
    anomaly: bool,
}

/// Summary of a pipeline batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub trials: u64,
    pub messages: u64,
    pub mode: Mode,
    pub tau: Estimate,
    /// Fraction of trials whose reproduction exceeds `d`.
    pub failure: Estimate,
    /// Per-letter distortion.
    pub distortion: Estimate,
    pub source_miss: Estimate,
    /// Absent in true-path mode, where only `channel_error_bound` is known.
    pub channel_error: Option<Estimate>,
    pub channel_error_bound: f64,
    /// Trials ending above `d` in the guaranteed-distortion pipeline.
    pub violations: u64,
    pub anomalies: u64,
    /// Comparison length in channel uses.
    pub reference_length: f64,
}

impl PipelineStats {
    fn new(
        outcomes: &[Outcome],
        messages: u64,
        mode: Mode,
        channel_error_bound: f64,
        reference_length: f64,
    ) -> Self {
        let n = outcomes.len() as u64;
        let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
        let tau: Accumulator = outcomes.iter().map(|o| o.tau as f64).collect();
        let dist: Accumulator = outcomes.iter().map(|o| o.distortion).collect();
        let channel_error = (mode == Mode::FullDecoder)
            .then(|| proportion(count(|o| o.channel_error == Some(true)), n));
        Self {
            trials: n,
            messages,
            mode,
            tau: tau.estimate(),
            failure: proportion(count(|o| o.failure), n),
            distortion: dist.estimate(),
            source_miss: proportion(count(|o| o.miss), n),
            channel_error,
            channel_error_bound,
            violations: 0,
            anomalies: count(|o| o.anomaly),
            reference_length,
        }
    }

    /// Empirical failure rate plus the analytic channel term when the channel was not decoded.
    pub fn total_failure(&self) -> Estimate {
        match self.mode {
            Mode::FullDecoder => self.failure,
            Mode::TruePath => Estimate {
                estimate: self.failure.estimate + self.channel_error_bound,
                ..self.failure
            },
        }
    }
}

/// Options of the excess-distortion pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcessOptions {
    pub eps: f64,
    #[serde(default)]
    pub budget: ChannelBudget,
    /// Seed of a fixed relabelling applied between compressor and channel code.
    #[serde(default)]
    pub interface_permutation: Option<u64>,
}

fn generator<'a>(p: &Pipeline<'a>) -> Result<&'a Pmf> {
    p.rd.output_pmf()
        .ok_or_else(|| Error::Unsupported("pipelines need a discrete source".into()))
}

fn permutation(seed: Option<u64>, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if let Some(seed) = seed {
        perm.shuffle(&mut RngStream::tagged(
            seed,
            Purpose::Header as u64,
            u64::MAX,
        ));
    }
    perm
}

/// Random d-ball compressor sized for miss probability `eps - eps_ch`, feeding the threshold code.
pub fn simulate_excess(p: &Pipeline, opts: &ExcessOptions, run: Run) -> Result<PipelineStats> {
    let eps = opts.eps;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(out_of_range("eps", eps, "0 < eps <= 1"));
    }
    let capacity = p.dmc.capacity();
    if eps == 1.0 {
        let outcomes = vec![
            Outcome {
                failure: true,
                distortion: f64::NAN,
                ..Outcome::default()
            };
            run.trials as usize
        ];
        return Ok(PipelineStats::new(
            &outcomes,
            1,
            Mode::FullDecoder,
            0.0,
            0.0,
        ));
    }
    let eps_ch = opts.budget.value(p.k, eps);
    if !(eps_ch > 0.0 && eps_ch < eps) {
        return Err(Error::Infeasible(format!(
            "channel budget {eps_ch} leaves nothing of eps = {eps} for the source"
        )));
    }
    let gen = generator(p)?;
    let block = BlockSource::new(p.src, p.k)?;
    let profile = HitProfile::new(&block, gen, p.d)?;
    let m = profile.size_for_miss(eps - eps_ch, MAX_EXCESS_CODEBOOK)? as usize;
    let law = profile.index_law(m)?;
    let perm = permutation(opts.interface_permutation, m);
    let mut inverse = vec![0; m];
    let mut relabelled = vec![0.0; m];
    for (w, &c) in perm.iter().enumerate() {
        inverse[c] = w;
        relabelled[c] = law.get(w);
    }
    let prior = MessagePrior::explicit(Pmf::new(relabelled)?);
    let mode = if m <= MAX_FULL_MESSAGES {
        Mode::FullDecoder
    } else {
        Mode::TruePath
    };
    let code = StopFeedbackCode::new(p.dmc, &prior, (1.0 / eps_ch).ln())?;
    let k = p.k as f64;
    let outcomes = try_map_trials(
        run.trials,
        run.workers,
        || (Scratch::default(), Vec::new(), Vec::new()),
        |(scratch, s, z), t| {
            let seeds = TrialSeeds::new(run.master, t);
            block.sample(&mut seeds.stream(Purpose::Source), s);
            let book = LossyCodebook::new(seeds.family_key(Purpose::SourceCodebook), gen, p.k, m)?;
            let (w, hit) = dball_encode(&block, s, &book, p.d, z);
            let tr = code.send(perm[w], mode, seeds, scratch)?;
            let reproduced = tr.decoded.map_or(w, |c| inverse[c]);
            book.codeword(reproduced, z);
            Ok(Outcome {
                tau: tr.tau,
                distortion: block.total_distortion(s, z) / k,
                failure: !block.within(s, z, p.d),
                miss: !hit,
                channel_error: tr.error,
                anomaly: false,
            })
        },
    )?;
    let reference = source_expansion(p.k as u64, eps, p.rd)? / capacity;
    Ok(PipelineStats::new(
        &outcomes, m as u64, mode, eps_ch, reference,
    ))
}

/// Default codebook size for the average-distortion pipeline: `ln M = k R(d) + ln k`.
pub fn average_codebook_size(k: usize, rd: &RdSolution) -> u64 {
    let ln_m = k as f64 * rd.rate + (k as f64).ln();
    (ln_m.exp().ceil() as u64).clamp(1, MAX_AVERAGE_CODEBOOK)
}

/// Minimum-distortion compressor with `M` codewords and a threshold code at error `k^{-3/2}`.
pub fn simulate_average(p: &Pipeline, messages: Option<u64>, run: Run) -> Result<PipelineStats> {
    if p.src.has_unbounded_distortion() {
        return Err(Error::Unsupported(
            "average distortion needs a bounded distortion measure".into(),
        ));
    }
    if p.k < 2 {
        return Err(out_of_range("k", p.k as f64, "k >= 2"));
    }
    let m = messages.unwrap_or_else(|| average_codebook_size(p.k, p.rd));
    if m == 0 || m > MAX_AVERAGE_CODEBOOK {
        return Err(Error::TooLarge {
            what: "materialized codebook",
            size: m,
            limit: MAX_AVERAGE_CODEBOOK,
        });
    }
    let m = m as usize;
    let gen = generator(p)?;
    let block = BlockSource::new(p.src, p.k)?;
    let prior = MessagePrior::uniform(m)?;
    let eps_ch = (p.k as f64).powf(-1.5);
    let code = StopFeedbackCode::new(p.dmc, &prior, (1.0 / eps_ch).ln())?;
    let k = p.k as f64;
    let outcomes = try_map_trials(
        run.trials,
        run.workers,
        || (Scratch::default(), Vec::new()),
        |(scratch, s), t| {
            let seeds = TrialSeeds::new(run.master, t);
            block.sample(&mut seeds.stream(Purpose::Source), s);
            let book = LossyCodebook::new(seeds.family_key(Purpose::SourceCodebook), gen, p.k, m)?;
            let points = book.materialize();
            let w = min_distortion_encode(&block, s, &points);
            let tr = code.send(w, Mode::FullDecoder, seeds, scratch)?;
            let z = &points[tr.decoded.unwrap_or(w) * p.k..][..p.k];
            Ok(Outcome {
                tau: tr.tau,
                distortion: block.total_distortion(s, z) / k,
                failure: !block.within(s, z, p.d),
                miss: false,
                channel_error: tr.error,
                anomaly: false,
            })
        },
    )?;
    let reference = k * p.rd.rate / p.dmc.capacity();
    Ok(PipelineStats::new(
        &outcomes,
        m as u64,
        Mode::FullDecoder,
        eps_ch,
        reference,
    ))
}

/// Optimal zero-excess quantizer of a short block feeding the zero-error code with termination.
pub fn simulate_guaranteed(p: &Pipeline, run: Run) -> Result<PipelineStats> {
    let map = brute_force_deps_entropy(p.src, p.k, p.d, 0.0)?;
    let block = BlockAlphabet::new(p.src, p.k)?;
    let blocks = Pmf::from_weights(block.probs.clone())?;
    let prior = MessagePrior::explicit(map.cell_pmf());
    let code = VlftCode::new(p.dmc, &prior, VlftRule::Map)?;
    let outcomes = try_map_trials(run.trials, run.workers, Scratch::default, |scratch, t| {
        let seeds = TrialSeeds::new(run.master, t);
        let s = blocks.quantile(seeds.stream(Purpose::Source).uniform());
        let tr = code.send(map.assignment[s], seeds, scratch)?;
        let z = map.cells[tr.decoded.expect("full decoder")].reproduction;
        Ok(Outcome {
            tau: tr.tau,
            distortion: block.distortion(s, z),
            failure: !block.within(s, z, p.d),
            miss: false,
            channel_error: tr.error,
            anomaly: tr.anomaly,
        })
    })?;
    let mut stats = PipelineStats::new(
        &outcomes,
        prior.len() as u64,
        Mode::FullDecoder,
        0.0,
        map.entropy / p.dmc.capacity(),
    );
    stats.violations = outcomes.iter().filter(|o| o.failure).count() as u64;
    Ok(stats)
}
