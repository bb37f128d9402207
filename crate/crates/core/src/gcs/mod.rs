//! Gaussian compressed sensing: encoders, decoders, theoretical predictions
//! and the Monte Carlo harness.

pub mod decoders;
pub mod encoder;
pub mod experiment;
pub mod theory;

pub use decoders::{
    decode_l1, decode_ls, decode_oracle, decode_trivial, DecoderKind, L1Diagnostics, L1Options, L1Stop,
    RowSpaceFactor,
};
pub use encoder::{gaussian_encoder, EncoderInstance};
pub use experiment::{
    crossing_point, run_experiment, run_experiment_collect, summarize, ExperimentConfig, KRule, SummaryRow,
    TrialRecord,
};
pub use theory::{concentration_bounds, oracle_error_prediction, BoundKind, ConcentrationBound, Dims};
