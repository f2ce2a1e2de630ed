//! Separated source-channel pipelines with a variable-length interface.

mod lossy;
mod naive;
mod pipeline;

pub use lossy::{
    dball_encode, min_distortion_encode, BlockSource, HitProfile, LossyCodebook, DISTORTION_SLACK,
};
pub use naive::{naive_separation_bound, NaiveBound};
pub use pipeline::{
    average_codebook_size, simulate_average, simulate_excess, simulate_guaranteed, ChannelBudget,
    ExcessOptions, Pipeline, PipelineStats, MAX_AVERAGE_CODEBOOK, MAX_EXCESS_CODEBOOK,
};
