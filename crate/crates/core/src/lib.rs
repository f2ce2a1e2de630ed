//! Simulators and bound evaluators for variable-length feedback coding,
//! joint source-channel coding and energy-limited AWGN transmission.

pub mod channels;
pub mod energy;
pub mod error;
pub mod exec;
pub mod harness;
pub mod info;
pub mod jscc;
pub mod quadrature;
pub mod rate_distortion;
pub mod rng;
pub mod stats;
pub mod vlf;

pub use channels::{AwgnChannel, Dmc};
pub use error::{Error, Result};
pub use exec::{Run, Workers};
pub use info::{InfoValue, Pmf};
pub use rate_distortion::{RdSolution, SourceModel};
pub use rng::{seed_stream, RngStream, TrialSeeds};
pub use vlf::{MessagePrior, Transcript};
