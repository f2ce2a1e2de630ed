//! Rate-distortion function, tilted information, dispersion and exact
//! `(d, eps)`-entropy for short blocks.

mod covering;
mod solver;
pub(crate) mod source;

pub use covering::{
    brute_force_deps_entropy, excess_rate, BlockAlphabet, Cell, CoveringMap, MAX_BLOCK_POINTS,
};
pub use solver::{
    ba_at_slope, ba_rate_distortion, gaussian_quantized_check, rate_dispersion, source_expansion,
    tilted_information, Letter, OutputLaw, RdSolution, SlopePoint, TiltedInfoSample,
};
pub use source::{d_min_max, SourceModel};
