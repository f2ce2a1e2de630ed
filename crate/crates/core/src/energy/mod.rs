//! Energy-limited transmission over the AWGN channel.
//!
//! Energies are in the same units as `N0`; information quantities are nats, so
//! `E / N0` compares directly with rates in nats.

mod converse;
mod expansion;
mod feedback;
mod ppm;
mod separated;
mod sk;

pub use converse::{awgn_jscc_converse, awgn_jscc_converse_at, ConverseBound, TiltedLaw};
pub use expansion::{energy_expansion, EnergyExpansion};
pub use feedback::{
    diagonal_slot, huffman_code, simulate_feedback_energy, vl_feedback_energy_trial, BitOutcome,
    BitTransmitter, EnergyTrial, FeedbackStats, IdealBitTransmitter, PrefixCode,
    SprtBitTransmitter,
};
pub use ppm::{max_of_normals, ppm_error_prob, ppm_trial, PpmSpec, MAX_MATERIALIZED};
pub use separated::{
    affine_schedule, group_size, header_values, level, lossy_energy_error_bound,
    simulate_lossy_energy, simulate_separated, vl_separated_error_bound, EnergyBudget, EnergyStats,
    LossyEnergyBound, Payload, PowerMode, MAX_BOUND_MESSAGES, MAX_LOSSY_BLOCK,
};
pub use sk::{sk_block, sk_energy_ratio, sk_mse, sk_transmit, SkOutcome, SkState};
