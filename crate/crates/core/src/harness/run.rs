use std::f64::consts::LN_2;
use std::time::Instant;

use super::config::{BoundSpec, ChannelSpec, Experiment, ExperimentConfig, JsccScheme, SourceSpec, TransmitterSpec};
use super::record::{artifact_version, Metric, Relation, RunRecord, Unit, RECORD_SCHEMA_VERSION};
use crate::energy::{
    awgn_jscc_converse, energy_expansion, lossy_energy_error_bound, ppm_error_prob, ppm_trial, simulate_feedback_energy,
    simulate_lossy_energy, simulate_separated, sk_block, sk_energy_ratio, sk_mse, vl_separated_error_bound,
    IdealBitTransmitter, PpmSpec, SprtBitTransmitter,
};
use crate::error::{Error, Result};
use crate::exec::{map_trials, try_map_trials, Run, Workers};
use crate::jscc::{
    naive_separation_bound, simulate_average, simulate_excess, simulate_guaranteed, ExcessOptions, Pipeline,
    PipelineStats,
};
use crate::rate_distortion::{ba_rate_distortion, rate_dispersion, RdSolution, SourceModel};
use crate::rng::{Purpose, TrialSeeds};
use crate::stats::{proportion, require_trials, Accumulator};
use crate::vlf::{
    stop_feedback_length_bound, vlf_converse_length, vlft_converse_length, BatchSummary, Mode, StopFeedbackCode,
    VlftCode, VlftRule,
};

fn source_rd(source: &SourceSpec, d: f64) -> Result<(SourceModel, RdSolution)> {
    let src = source.build()?;
    let rd = ba_rate_distortion(&src, d)?;
    Ok((src, rd))
}

fn channel_capacity(channel: &ChannelSpec) -> Result<f64> {
    Ok(channel.build()?.capacity())
}

/// Runs one experiment; the record depends only on the config, never on `workers`.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let exp = &config.experiment;
    if exp.is_simulation() {
        require_trials(config.trials)
            .map_err(|e| Error::Config { path: "trials".into(), message: e.to_string() })?;
    }
    let run = Run { master: config.seed, trials: config.trials, workers: Workers(config.workers) };
    let start = Instant::now();
    let metrics = metrics_for(exp, run)?;
    Ok(RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        version: artifact_version(),
        kind: exp.name().into(),
        point: Vec::new(),
        seed: config.seed,
        trials: if exp.is_simulation() { config.trials } else { 0 },
        config: serde_json::to_value(config)?,
        metrics,
        warnings: config.warnings(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn metrics_for(exp: &Experiment, run: Run) -> Result<Vec<Metric>> {
    Ok(match exp {
        Experiment::Capacity { channel } => {
            let dmc = channel.build()?;
            vec![Metric::exact("capacity", Unit::Nats, dmc.capacity()), Metric::exact("a0", Unit::Nats, dmc.a0())]
        }
        Experiment::RateDistortion { source, d } => {
            let (src, rd) = source_rd(source, *d)?;
            vec![
                Metric::exact("rate", Unit::Nats, rd.rate),
                Metric::exact("dispersion", Unit::Nats2, rate_dispersion(&rd, &src)),
                Metric::exact("slope", Unit::Plain, rd.slope),
            ]
        }
        Experiment::Expansion { expansion, source, d } => {
            let rd = match (expansion.needs_source(), source, d) {
                (false, _, _) => None,
                (true, Some(s), Some(d)) => Some(source_rd(s, *d)?.1),
                (true, _, _) => {
                    return Err(Error::Config {
                        path: "experiment.source".into(),
                        message: format!("{} needs `source` and `d`", expansion.name()),
                    })
                }
            };
            vec![Metric::exact(expansion.name(), Unit::Nats, energy_expansion(expansion, rd.as_ref())?)]
        }
        Experiment::StopFeedback { channel, prior, gamma, mode } => {
            let dmc = channel.build()?;
            let prior = prior.build()?;
            let code = StopFeedbackCode::new(&dmc, &prior, *gamma)?;
            let transcripts = code.run(*mode, run.master, run.trials, run.workers)?;
            let c = dmc.capacity();
            let s = BatchSummary::new(&transcripts, c);
            let h = prior.entropy();
            let mut m = vec![
                Metric::exact("entropy", Unit::Nats, h),
                Metric::estimate("tau", Unit::ChannelUses, s.tau).checked((h + gamma + dmc.a0()) / c, Relation::Le),
                Metric::estimate("info_sum", Unit::Nats, s.info_sum),
                Metric::estimate("doob_gap", Unit::Nats, s.doob_gap).checked(dmc.a0(), Relation::AbsLe),
                Metric::exact("error_bound", Unit::Probability, (-gamma).exp()),
            ];
            if let Some(e) = s.error {
                m.push(Metric::estimate("error", Unit::Probability, e).checked((-gamma).exp(), Relation::Le));
            }
            m
        }
        Experiment::Vlft { channel, prior, rule } => {
            let dmc = channel.build()?;
            let prior = prior.build()?;
            let code = VlftCode::new(&dmc, &prior, *rule)?;
            let transcripts = code.run(run.master, run.trials, run.workers)?;
            let c = dmc.capacity();
            let s = BatchSummary::new(&transcripts, c);
            let error = s.error.expect("full decoder");
            let mut error = Metric::estimate("error", Unit::Probability, error);
            if *rule == VlftRule::Map {
                error = error.checked(0.0, Relation::Le);
            }
            vec![
                Metric::exact("entropy_over_capacity", Unit::ChannelUses, prior.entropy() / c),
                Metric::estimate("tau", Unit::ChannelUses, s.tau),
                error,
                Metric::exact("anomalies", Unit::Count, s.anomalies as f64),
            ]
        }
        Experiment::Jscc { source, channel, k, d, scheme } => {
            let (src, rd) = source_rd(source, *d)?;
            let dmc = channel.build()?;
            let p = Pipeline { src: &src, dmc: &dmc, rd: &rd, k: *k, d: *d };
            let c = dmc.capacity();
            match scheme {
                JsccScheme::Excess { eps, budget, interface_permutation } => {
                    let opts = ExcessOptions { eps: *eps, budget: *budget, interface_permutation: *interface_permutation };
                    let s = simulate_excess(&p, &opts, run)?;
                    let mut m = pipeline_metrics(&s);
                    m.push(Metric::estimate("excess", Unit::Probability, s.total_failure()).checked(*eps, Relation::Le));
                    m.push(Metric::exact("expansion", Unit::ChannelUses, s.reference_length));
                    if *eps < 1.0 {
                        m.push(Metric::exact("vlf_converse", Unit::ChannelUses, vlf_converse_length(*k as u64, *eps, &rd, c)?));
                        m.push(Metric::exact("vlft_converse", Unit::ChannelUses, vlft_converse_length(*k as u64, *eps, &rd, c)?));
                        m.push(Metric::exact("naive_separation", Unit::ChannelUses, naive_separation_bound(*k as u64, *eps, c, &rd)?.length));
                    }
                    m
                }
                JsccScheme::Average { messages } => {
                    let s = simulate_average(&p, *messages, run)?;
                    let mut m = pipeline_metrics(&s);
                    m.push(Metric::exact("first_order_length", Unit::ChannelUses, s.reference_length));
                    m
                }
                JsccScheme::Guaranteed => {
                    let s = simulate_guaranteed(&p, run)?;
                    let mut m = pipeline_metrics(&s);
                    m.push(Metric::estimate("violations", Unit::Probability, proportion(s.violations, s.trials)).checked(0.0, Relation::Le));
                    m.push(Metric::exact("entropy_over_capacity", Unit::ChannelUses, s.reference_length));
                    m
                }
            }
        }
        Experiment::Sk { variance, snr, uses, block, n0 } => {
            let k = *block as usize;
            let rows = try_map_trials(run.trials, run.workers, || (), |_, t| {
                let mut rng = TrialSeeds::new(run.master, t).stream(Purpose::Noise);
                let (errors, energy) = sk_block(k, *variance, *snr, *uses, *n0, &mut rng)?;
                Ok((errors.iter().sum::<f64>() / k as f64, energy))
            })?;
            let (mut mse, mut power) = (Accumulator::new(), Accumulator::new());
            let per_use = 0.5 * n0 * (k as f64 * *uses as f64);
            for (e, energy) in rows {
                mse.push(e);
                if per_use > 0.0 {
                    power.push(energy / per_use);
                }
            }
            let mut m = vec![
                Metric::estimate("mse", Unit::Distortion, mse.estimate()).checked(sk_mse(*variance, *snr, *uses), Relation::Near),
                Metric::exact("energy_ratio", Unit::Plain, sk_energy_ratio(*snr)),
            ];
            if per_use > 0.0 {
                m.push(Metric::estimate("power", Unit::Plain, power.estimate()).checked(*snr, Relation::Near));
            }
            m
        }
        Experiment::HuffmanEnergy { prior, transmitter, n0 } => {
            let prior = prior.build()?;
            let s = match transmitter {
                TransmitterSpec::Ideal => simulate_feedback_energy(&prior, || IdealBitTransmitter { n0: *n0 }, run)?,
                TransmitterSpec::Sprt { step_energy, delta } => {
                    let tx = SprtBitTransmitter::new(*n0, *step_energy, *delta)?;
                    simulate_feedback_energy(&prior, || tx, run)?
                }
            };
            let h = prior.entropy();
            let ideal = matches!(transmitter, TransmitterSpec::Ideal);
            let mut error = Metric::estimate("error", Unit::Probability, s.error);
            let mut per_bit = Metric::estimate("energy_per_n0_ln2", Unit::EnergyBits, s.energy.scaled(1.0 / (n0 * LN_2)));
            if ideal {
                error = error.checked(0.0, Relation::Le);
                per_bit = per_bit.checked(h / LN_2 + 1.0, Relation::Lt);
            }
            vec![
                Metric::exact("entropy", Unit::Nats, h),
                Metric::exact("mean_length", Unit::Count, s.mean_length),
                Metric::estimate("energy", Unit::Energy, s.energy),
                per_bit,
                Metric::estimate("energy_over_n0", Unit::Nats, s.energy.scaled(1.0 / n0)).checked(h, Relation::Ge),
                error,
            ]
        }
        Experiment::SeparatedEnergy { prior, budget, n0, mode } => {
            let prior = prior.build()?;
            let bound = vl_separated_error_bound(&prior, budget, *n0, *mode, false)?;
            let s = simulate_separated(&prior, budget, *n0, *mode, run)?;
            vec![
                Metric::estimate("error", Unit::Probability, s.error).checked(bound, Relation::Le),
                Metric::estimate("energy", Unit::Energy, s.energy),
                Metric::estimate("energy_per_n0_ln2", Unit::EnergyBits, s.energy.scaled(1.0 / (n0 * LN_2))),
            ]
        }
        Experiment::LossyEnergy { source, k, d, messages, budget, n0 } => {
            let (src, rd) = source_rd(source, *d)?;
            let b = lossy_energy_error_bound(&src, &rd, *k, *d, *messages, budget, *n0)?;
            let s = simulate_lossy_energy(&src, &rd, *k, *d, *messages, budget, *n0, run)?;
            vec![
                Metric::exact("payload_term", Unit::Probability, b.payload),
                Metric::exact("header_term", Unit::Probability, b.header),
                Metric::exact("miss_term", Unit::Probability, b.miss),
                Metric::estimate("failure", Unit::Probability, s.error).checked(b.total(), Relation::Le),
                Metric::estimate("miss", Unit::Probability, s.miss).checked(b.miss, Relation::Near),
                Metric::estimate("energy", Unit::Energy, s.energy),
            ]
        }
        Experiment::Ppm { messages, energy, n0 } => {
            let spec = PpmSpec::new(*messages, *energy, *n0)?;
            let errors = map_trials(run.trials, run.workers, || (), |_, t| {
                ppm_trial(&spec, &mut TrialSeeds::new(run.master, t).stream(Purpose::Noise))
            })?;
            let est = proportion(errors.iter().filter(|&&e| e).count() as u64, run.trials);
            vec![Metric::estimate("error", Unit::Probability, est).checked(spec.error_prob(), Relation::Near)]
        }
        Experiment::Bound(b) => bound_metrics(b)?,
    })
}

fn pipeline_metrics(s: &PipelineStats) -> Vec<Metric> {
    let mut m = vec![
        Metric::exact("messages", Unit::Count, s.messages as f64),
        Metric::estimate("tau", Unit::ChannelUses, s.tau),
        Metric::estimate("failure", Unit::Probability, s.failure),
        Metric::estimate("distortion", Unit::Distortion, s.distortion),
        Metric::estimate("source_miss", Unit::Probability, s.source_miss),
    ];
    if let Some(e) = s.channel_error {
        m.push(Metric::estimate("channel_error", Unit::Probability, e).checked(s.channel_error_bound, Relation::Le));
    }
    if s.mode == Mode::TruePath {
        m.push(Metric::exact("channel_error_bound", Unit::Probability, s.channel_error_bound));
    }
    m
}

fn bound_metrics(b: &BoundSpec) -> Result<Vec<Metric>> {
    Ok(match b {
        BoundSpec::StopFeedbackLength { channel, prior, eps } => {
            let dmc = channel.build()?;
            let prior = prior.build()?;
            let v = stop_feedback_length_bound(prior.entropy(), *eps, dmc.capacity(), dmc.a0())?;
            vec![Metric::exact("length", Unit::ChannelUses, v)]
        }
        BoundSpec::FeedbackConverse { channel, source, d, k, eps } => {
            let c = channel_capacity(channel)?;
            let rd = source_rd(source, *d)?.1;
            vec![
                Metric::exact("vlf_converse", Unit::ChannelUses, vlf_converse_length(*k, *eps, &rd, c)?),
                Metric::exact("vlft_converse", Unit::ChannelUses, vlft_converse_length(*k, *eps, &rd, c)?),
            ]
        }
        BoundSpec::NaiveSeparation { channel, source, d, k, eps } => {
            let c = channel_capacity(channel)?;
            let rd = source_rd(source, *d)?.1;
            let n = naive_separation_bound(*k, *eps, c, &rd)?;
            vec![
                Metric::exact("length", Unit::ChannelUses, n.length),
                Metric::exact("zeta", Unit::Probability, n.zeta),
                Metric::exact("eta", Unit::Probability, n.eta),
            ]
        }
        BoundSpec::AwgnConverse { source, d, k, energy, n0 } => {
            let (src, rd) = source_rd(source, *d)?;
            let cb = awgn_jscc_converse(&src, &rd, *k, *energy, *n0)?;
            vec![Metric::exact("eps_lower", Unit::Probability, cb.eps), Metric::exact("gamma", Unit::Nats, cb.gamma)]
        }
        BoundSpec::SeparatedEnergy { prior, budget, n0, mode, weaken } => {
            let prior = prior.build()?;
            vec![Metric::exact("eps_upper", Unit::Probability, vl_separated_error_bound(&prior, budget, *n0, *mode, *weaken)?)]
        }
        BoundSpec::LossyEnergy { source, d, k, messages, budget, n0 } => {
            let (src, rd) = source_rd(source, *d)?;
            let b = lossy_energy_error_bound(&src, &rd, *k, *d, *messages, budget, *n0)?;
            vec![
                Metric::exact("payload_term", Unit::Probability, b.payload),
                Metric::exact("header_term", Unit::Probability, b.header),
                Metric::exact("miss_term", Unit::Probability, b.miss),
                Metric::exact("eps_upper", Unit::Probability, b.total()),
            ]
        }
        BoundSpec::Ppm { messages, energy, n0 } => {
            vec![Metric::exact("error", Unit::Probability, ppm_error_prob(*energy, *messages, *n0)?)]
        }
    })
}
