//! Stochastic link-level simulator for a three-stage monitoring chain: a
//! molecular-diffusion hop inside the body, a terahertz hop to an on-body
//! interface, and a two-hop RF backhaul to a remote endpoint.
//!
//! Every stochastic entry point takes a [`RandomSource`]; results are a pure
//! function of configuration and seed.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backhaul;
pub mod error;
pub mod mc;
pub mod pipeline;
pub mod result;
pub mod rng;
pub mod special;
pub mod stats;
pub mod thz;
pub mod units;
pub mod vec3;

pub use error::{Result, SimError};
pub use result::{config_digest, RateResult, Segment};
pub use rng::{derive_seed, derive_stream, gaussian, RandomSource};
pub use stats::{estimate_mi, ChannelStats};
pub use vec3::Vec3;
pub use pipeline::{run_pipeline, sweep_distance, sweep_snr, ArchitectureConfig, PipelineReport, SweepRow};
