//! Overlapping community structure through affiliation graphs.
//!
//! A node's community memberships drive its edges: under the Jaccard-scaled
//! model the probability that two nodes connect is a single network-wide
//! scalar times the Jaccard similarity of their community sets, while the
//! classic per-community model flips an independent coin per shared
//! community. This crate implements both probability models, a maximum
//! likelihood community detector built on stochastic membership-move search,
//! generators for synthetic benchmarks (including the community-event
//! friendship process whose co-attendance probability is exactly the Jaccard
//! similarity), the observation experiments that expose the linear
//! edge-probability trend, and overlap-aware cover comparison metrics.
//!
//! All probability and likelihood arithmetic is generic over the scalar type
//! through [`Real`] (`f32` or `f64`); quantities that are exact rationals
//! (Jaccard counts, the permutation oracle, the omega index) are computed in
//! integer arithmetic. The `*64` aliases below pin the default `f64` scalar.

#![forbid(unsafe_code)]

pub mod affiliation;
pub mod error;
pub mod generator;
pub mod graph;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod models;
pub mod real;
pub mod validate;

#[doc(hidden)]
pub mod testutil;

pub use affiliation::{Affiliation, CommunityId};
pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use metrics::Cover;
pub use real::Real;

/// Model parameters over the default `f64` scalar.
pub type ModelParams64 = models::ModelParams<f64>;
/// Per-community probabilities over the default `f64` scalar.
pub type AgmParams64 = models::AgmParams<f64>;
/// Search grid over the default `f64` scalar.
pub type GridSpec64 = models::GridSpec<f64>;
/// Detection configuration over the default `f64` scalar.
pub type McmcConfig64 = inference::McmcConfig<f64>;
/// Detection result over the default `f64` scalar.
pub type DetectionResult64 = inference::DetectionResult<f64>;
/// Event-process configuration over the default `f64` scalar.
pub type ProcessConfig64 = generator::ProcessConfig<f64>;
/// Binning report over the default `f64` scalar.
pub type BinningReport64 = validate::BinningReport<f64>;
/// Isolated-community report over the default `f64` scalar.
pub type IsolatedCommunityReport64 = validate::IsolatedCommunityReport<f64>;
