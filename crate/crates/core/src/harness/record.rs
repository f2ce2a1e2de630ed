use serde::{Deserialize, Serialize};

use crate::stats::Estimate;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// What a metric measures; decides how the unit flag rescales it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Information, rescaled by `1 / ln 2` for bits.
    Nats,
    /// Squared information, rescaled by `1 / ln^2 2`.
    Nats2,
    Bits,
    Bits2,
    ChannelUses,
    Probability,
    Count,
    /// Same units as `N0`.
    Energy,
    /// Multiples of `N0 ln 2`.
    EnergyBits,
    Distortion,
    Plain,
}

/// How an estimate must relate to its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `estimate <= bound + 4 se`.
    Le,
    /// `estimate >= bound - 4 se`.
    Ge,
    /// `|estimate - bound| <= 4 se`.
    Near,
    /// `estimate < bound` strictly, up to `4 se`.
    Lt,
    /// `|estimate| <= bound + 4 se`.
    AbsLe,
}

/// Tolerance multiplier on the standard error for every bound check.
pub const SE_MULTIPLIER: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub bound: f64,
    pub relation: Relation,
    pub violated: bool,
}

impl Check {
    pub fn evaluate(est: &Estimate, bound: f64, relation: Relation) -> Self {
        let slack = SE_MULTIPLIER * est.std_error;
        let ok = match relation {
            Relation::Le => est.estimate <= bound + slack,
            Relation::Ge => est.estimate >= bound - slack,
            Relation::Near => (est.estimate - bound).abs() <= slack,
            Relation::Lt => est.estimate < bound + slack,
            Relation::AbsLe => est.estimate.abs() <= bound + slack,
        };
        Self { bound, relation, violated: !ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub unit: Unit,
    pub value: Estimate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<Check>,
}

impl Metric {
    pub fn exact(name: &str, unit: Unit, value: f64) -> Self {
        Self { name: name.into(), unit, value: Estimate::exact(value), check: None }
    }

    pub fn estimate(name: &str, unit: Unit, value: Estimate) -> Self {
        Self { name: name.into(), unit, value, check: None }
    }

    pub fn checked(mut self, bound: f64, relation: Relation) -> Self {
        self.check = Some(Check::evaluate(&self.value, bound, relation));
        self
    }

    /// Rescales information metrics (value, bound, errors) to bits.
    pub fn to_bits(&self) -> Self {
        let (unit, c) = match self.unit {
            Unit::Nats => (Unit::Bits, std::f64::consts::LN_2),
            Unit::Nats2 => (Unit::Bits2, std::f64::consts::LN_2 * std::f64::consts::LN_2),
            _ => return self.clone(),
        };
        Self {
            name: self.name.clone(),
            unit,
            value: Estimate {
                estimate: self.value.estimate / c,
                std_error: self.value.std_error / c,
                ci95: self.value.ci95 / c,
                n: self.value.n,
            },
            check: self.check.as_ref().map(|k| Check { bound: k.bound / c, ..k.clone() }),
        }
    }
}

/// Everything one run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    /// Crate version plus the build's git revision when known.
    pub version: String,
    pub kind: String,
    /// Sweep coordinates as `path=value` pairs; empty for single runs.
    #[serde(default)]
    pub point: Vec<(String, serde_json::Value)>,
    pub seed: u64,
    pub trials: u64,
    pub config: serde_json::Value,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn violations(&self) -> Vec<&Metric> {
        self.metrics.iter().filter(|m| m.check.as_ref().is_some_and(|c| c.violated)).collect()
    }

    /// Copy with wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_s: 0.0, ..self.clone() }
    }
}

pub fn artifact_version() -> String {
    match option_env!("FEEDLAB_GIT_REV") {
        Some(rev) => format!("{}+{rev}", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}
