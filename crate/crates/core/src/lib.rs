//! Extraction of concise symbolic classification rules from tabular data,
//! either directly or by way of a small trained feedforward network.
//!
//! The library is organised as a pipeline of independent stages:
//!
//! - [`dataset`]: schemas, CSV loading with mode imputation, built-in
//!   fixtures, normalization, stratified splitting, contradiction cleaning.
//! - [`network`]: a single-hidden-layer sigmoid network trained by
//!   stochastic backpropagation, grown one node at a time on stall and
//!   pruned connection by connection afterwards.
//! - [`discretize`]: interval clustering of hidden activations and the
//!   fidelity-preserving choice of the clustering width.
//! - [`rex`]: the rule extractor itself — consistent single-rule search
//!   (greedy or exhaustive), sequential covering, three pruning passes,
//!   default-class selection, and composition of hidden-layer rules with
//!   input-space rules.
//! - [`pipeline`]: the two end-to-end modes (`direct` on raw data, `reann`
//!   through the network), evaluation reports, and benchmark profiles.
//!
//! Everything numeric is generic over the scalar type through [`Scalar`];
//! `f64` is the default everywhere and the aliases below pin the common
//! instantiations.

pub mod dataset;
pub mod discretize;
mod error;
pub mod network;
pub mod pipeline;
pub mod rex;

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::Serialize;

pub use error::{Error, Result};

/// Floating-point scalar the numeric core is generic over.
///
/// Blanket-implemented for `f32` and `f64`. Derived statistics (accuracies,
/// rates, fidelities) stay `f64` regardless of the scalar in use.
/// Deserialization bounds are left to the serde derives on each container
/// so the trait solver sees exactly one candidate per obligation.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + fmt::Debug
    + fmt::Display
    + FromStr
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, lossy for narrower scalars.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Widening conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("any Scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + fmt::Debug
        + fmt::Display
        + FromStr
        + Serialize
        + Send
        + Sync
        + 'static
{
}

pub type Dataset32 = dataset::Dataset<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type Network32 = network::Network<f32>;
pub type Network64 = network::Network<f64>;
pub type RuleSet32 = rex::RuleSet<f32>;
pub type RuleSet64 = rex::RuleSet<f64>;
pub type PipelineConfig32 = pipeline::PipelineConfig<f32>;
pub type PipelineConfig64 = pipeline::PipelineConfig<f64>;
