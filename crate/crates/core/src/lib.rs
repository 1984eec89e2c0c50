//! Hateful-user detection on social graphs.
//!
//! The crate covers the full experimental pipeline: sparse directed graphs and
//! their normalizations, belief-diffusion seed sampling, document and node
//! embeddings, five semi-supervised GNN classifiers trained through a small
//! reverse-mode tape, a stratified label-fraction benchmark harness, zero-shot
//! cross-graph evaluation, temporal post-hoc analytics, and a synthetic data
//! generator with planted homophilous communities.

// CSR kernels index several parallel arrays by the same position, and
// `!(x > 0.0)` guards are meant to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod container;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod labels;
pub mod node_embed;
pub mod pipeline;
pub mod posthoc;
pub mod rng;
pub mod seeds;
pub mod sgns;
pub mod synth;
pub mod text;

pub use error::{Error, Result};

/// Dense row-major real matrix used for features, embeddings and activations.
pub type Matrix = ndarray::Array2<f64>;

/// Class index of hateful users.
pub const HATEFUL: u8 = 1;
/// Class index of non-hateful users.
pub const NON_HATEFUL: u8 = 0;
