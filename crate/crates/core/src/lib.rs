//! Node-classification toolkit for structural mixup on graph convolutional
//! networks.
//!
//! A two-layer GCN is trained on a citation-style graph; after a warmup,
//! every epoch derives pseudo-labels, prediction confidence and per-edge
//! adjacency gradients from a deterministic pass, synthesizes inter- and
//! intra-class mixup nodes from confidence pools, attaches them to the graph
//! through high-gradient edges, and takes an extra optimizer step on the
//! synthesized nodes.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below name the two instantiations.

pub mod data;
pub mod edges;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod mixup;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Seedable, serializable RNG used for every stochastic choice.
pub type Rng = rand_chacha::ChaCha8Rng;

pub type Graph64 = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type NormalizedAdjacency64 = graph::NormalizedAdjacency<f64>;
pub type NormalizedAdjacency32 = graph::NormalizedAdjacency<f32>;
pub type GcnModel64 = gcn::GcnModel<f64>;
pub type GcnModel32 = gcn::GcnModel<f32>;
pub type Gradients64 = gcn::Gradients<f64>;
pub type Gradients32 = gcn::Gradients<f32>;
pub type MixupBatch64 = mixup::MixupBatch<f64>;
pub type MixupBatch32 = mixup::MixupBatch<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;

/// `⌈frac · n⌉`, ignoring floating-point excess below 1e-9 (so that
/// `0.1 · 30` counts 3, not 4).
pub(crate) fn fraction_count(frac: f64, n: usize) -> usize {
    let x = frac * n as f64;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}
