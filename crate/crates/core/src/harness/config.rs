use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::Dmc;
use crate::energy::{EnergyBudget, EnergyExpansion, PowerMode};
use crate::error::{Error, Result};
use crate::info::Pmf;
use crate::jscc::ChannelBudget;
use crate::rate_distortion::SourceModel;
use crate::vlf::{Mode, PriorSpec, VlftRule};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// One experiment: what to run, how many trials and how to seed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Worker threads; 0 uses every core. Results do not depend on it.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub units: Units,
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn default_trials() -> u64 {
    10_000
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

/// Up to two axes; each axis replaces the value at a dotted path in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// e.g. `experiment.k`.
    pub path: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Bsc { p: f64 },
    Bec { erasure: f64 },
    ZChannel { p: f64 },
    Noiseless { size: usize },
    Matrix { rows: Vec<Vec<f64>> },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<Dmc> {
        match self {
            ChannelSpec::Bsc { p } => Dmc::bsc(*p),
            ChannelSpec::Bec { erasure } => Dmc::bec(*erasure),
            ChannelSpec::ZChannel { p } => Dmc::z_channel(*p),
            ChannelSpec::Noiseless { size } => Dmc::noiseless(*size),
            ChannelSpec::Matrix { rows } => Dmc::new(rows.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Bernoulli(p) under Hamming distortion.
    BinaryHamming { p: f64 },
    /// Hamming distortion on the alphabet of `pmf`.
    Hamming { pmf: Vec<f64> },
    Discrete {
        pmf: Vec<f64>,
        /// Entries may be the string `"inf"`.
        #[serde(with = "crate::rate_distortion::source::inf_matrix")]
        distortion: Vec<Vec<f64>>,
    },
    Gaussian { variance: f64 },
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceModel> {
        match self {
            SourceSpec::BinaryHamming { p } => SourceModel::binary_hamming(*p),
            SourceSpec::Hamming { pmf } => Ok(SourceModel::hamming(Pmf::new(pmf.clone())?)),
            SourceSpec::Discrete { pmf, distortion } => SourceModel::discrete(Pmf::new(pmf.clone())?, distortion.clone()),
            SourceSpec::Gaussian { variance } => SourceModel::gaussian(*variance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JsccScheme {
    Excess {
        eps: f64,
        #[serde(default)]
        budget: ChannelBudget,
        #[serde(default)]
        interface_permutation: Option<u64>,
    },
    Average {
        #[serde(default)]
        messages: Option<u64>,
    },
    Guaranteed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransmitterSpec {
    Ideal,
    Sprt {
        step_energy: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

fn default_delta() -> f64 {
    1e-9
}

/// Analytic bounds that need no trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    /// Expected length of the threshold code.
    StopFeedbackLength { channel: ChannelSpec, prior: PriorSpec, eps: f64 },
    /// Both converse lengths for the lossy problem.
    FeedbackConverse { channel: ChannelSpec, source: SourceSpec, d: f64, k: u64, eps: f64 },
    NaiveSeparation { channel: ChannelSpec, source: SourceSpec, d: f64, k: u64, eps: f64 },
    AwgnConverse { source: SourceSpec, d: f64, k: u64, energy: f64, n0: f64 },
    SeparatedEnergy {
        prior: PriorSpec,
        budget: EnergyBudget,
        n0: f64,
        #[serde(default = "max_mode")]
        mode: PowerMode,
        #[serde(default)]
        weaken: bool,
    },
    LossyEnergy { source: SourceSpec, d: f64, k: usize, messages: u64, budget: EnergyBudget, n0: f64 },
    Ppm { messages: f64, energy: f64, n0: f64 },
}

fn max_mode() -> PowerMode {
    PowerMode::Max
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Capacity {
        channel: ChannelSpec,
    },
    RateDistortion {
        source: SourceSpec,
        d: f64,
    },
    /// Energy expansions; `source` and `d` are needed for every kind but the bit ones.
    Expansion {
        expansion: EnergyExpansion,
        #[serde(default)]
        source: Option<SourceSpec>,
        #[serde(default)]
        d: Option<f64>,
    },
    StopFeedback {
        channel: ChannelSpec,
        prior: PriorSpec,
        gamma: f64,
        #[serde(default = "full_decoder")]
        mode: Mode,
    },
    Vlft {
        channel: ChannelSpec,
        prior: PriorSpec,
        #[serde(default)]
        rule: VlftRule,
    },
    Jscc {
        source: SourceSpec,
        channel: ChannelSpec,
        k: usize,
        d: f64,
        scheme: JsccScheme,
    },
    Sk {
        variance: f64,
        snr: f64,
        uses: u32,
        #[serde(default = "one")]
        block: u64,
        #[serde(default = "unit_n0")]
        n0: f64,
    },
    HuffmanEnergy {
        prior: PriorSpec,
        transmitter: TransmitterSpec,
        #[serde(default = "unit_n0")]
        n0: f64,
    },
    SeparatedEnergy {
        prior: PriorSpec,
        budget: EnergyBudget,
        #[serde(default = "unit_n0")]
        n0: f64,
        #[serde(default = "max_mode")]
        mode: PowerMode,
    },
    LossyEnergy {
        source: SourceSpec,
        k: usize,
        d: f64,
        messages: u64,
        budget: EnergyBudget,
        #[serde(default = "unit_n0")]
        n0: f64,
    },
    Ppm {
        messages: u64,
        energy: f64,
        #[serde(default = "unit_n0")]
        n0: f64,
    },
    Bound(BoundSpec),
}

fn full_decoder() -> Mode {
    Mode::FullDecoder
}

fn unit_n0() -> f64 {
    1.0
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Capacity { .. } => "capacity",
            Experiment::RateDistortion { .. } => "rate_distortion",
            Experiment::Expansion { .. } => "expansion",
            Experiment::StopFeedback { .. } => "stop_feedback",
            Experiment::Vlft { .. } => "vlft",
            Experiment::Jscc { .. } => "jscc",
            Experiment::Sk { .. } => "sk",
            Experiment::HuffmanEnergy { .. } => "huffman_energy",
            Experiment::SeparatedEnergy { .. } => "separated_energy",
            Experiment::LossyEnergy { .. } => "lossy_energy",
            Experiment::Ppm { .. } => "ppm",
            Experiment::Bound(_) => "bound",
        }
    }

    /// Whether the experiment draws random trials.
    pub fn is_simulation(&self) -> bool {
        !matches!(
            self,
            Experiment::Capacity { .. } | Experiment::RateDistortion { .. } | Experiment::Expansion { .. } | Experiment::Bound(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

/// Converts a deserialization failure into [`Error::Config`] with the offending field path.
pub(crate) fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().to_string() }
    })
}

/// Parses text into the untyped tree that sweeps edit before typing.
pub fn parse_value(text: &str, format: ConfigFormat) -> Result<serde_json::Value> {
    match format {
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| Error::Config { path: ".".into(), message: e.to_string() }),
        ConfigFormat::Toml => {
            let v: toml::Value = toml::from_str(text).map_err(|e| Error::Config { path: ".".into(), message: e.to_string() })?;
            serde_json::to_value(v).map_err(Error::from)
        }
    }
}

impl ExperimentConfig {
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: Self = from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        Self::from_value(parse_value(text, format)?)
    }

    /// Reads a `.toml` or `.json` file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, format_of(path))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config {
                path: "schema_version".into(),
                message: format!("unsupported version {}, expected {CONFIG_SCHEMA_VERSION}", self.schema_version),
            });
        }
        if self.trials == 0 {
            return Err(Error::Config { path: "trials".into(), message: "must be at least 1".into() });
        }
        Ok(())
    }

    /// Config-time notes that do not stop the run.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let sources: Vec<&SourceSpec> = match &self.experiment {
            Experiment::RateDistortion { source, .. }
            | Experiment::Jscc { source, .. }
            | Experiment::LossyEnergy { source, .. } => vec![source],
            Experiment::Expansion { source: Some(source), .. } => vec![source],
            Experiment::Bound(
                BoundSpec::FeedbackConverse { source, .. }
                | BoundSpec::NaiveSeparation { source, .. }
                | BoundSpec::AwgnConverse { source, .. }
                | BoundSpec::LossyEnergy { source, .. },
            ) => vec![source],
            _ => vec![],
        };
        for s in sources {
            if let SourceSpec::Discrete { distortion, .. } = s {
                if distortion.iter().flatten().any(|x| x.is_infinite()) {
                    out.push("distortion measure is unbounded; the moment condition on d(S, Z*) is assumed, not checked".into());
                }
            }
        }
        out
    }
}

pub fn format_of(path: &Path) -> ConfigFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => ConfigFormat::Json,
        _ => ConfigFormat::Toml,
    }
}
