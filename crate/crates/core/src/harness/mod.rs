//! Config-driven experiment runner: typed configs, sweeps, records and writers.

pub mod config;
pub mod emit;
pub mod record;
pub mod run;
pub mod sweep;

pub use config::{ConfigFormat, Experiment, ExperimentConfig, Units, CONFIG_SCHEMA_VERSION};
pub use emit::{read_jsonl, write_records, OutputFormat};
pub use record::{Metric, Relation, RunRecord, Unit};
pub use run::run;
pub use sweep::{expand, run_sweep};
