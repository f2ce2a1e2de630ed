//! Variable-length codes with feedback over a simulated DMC.
//!
//! Scores are `I_n(m) = sum_i i(C_m[i]; Y_i) - ln 1/P(m)`, so a prior enters
//! as a per-message head start.

mod bounds;
mod codebook;
mod prior;
mod simulate;

pub use bounds::{
    equiprobable_length_bound, stop_feedback_length_bound, vlf_converse_from_rate,
    vlf_converse_length, vlft_converse_from_rate, vlft_converse_length,
};
pub use codebook::LazyCodebook;
pub use prior::{MessagePrior, PriorSpec, DEFAULT_TAIL};
pub use simulate::{
    stop_feedback_trial, vlft_length_via_sum, vlft_trial, BatchSummary, Mode, Scratch,
    StopFeedbackCode, SumEstimate, Transcript, VlftCode, VlftRule, DEFAULT_CAP, MAX_FULL_MESSAGES,
};
