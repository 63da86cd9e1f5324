//! Sparsification of uncertain graphs.
//!
//! Given an uncertain graph and a ratio `alpha`, the sparsifiers here keep
//! `round(alpha * |E|)` edges and reassign their probabilities so expected
//! vertex degrees (or cut sizes) stay close to the original while entropy
//! drops. The crate also ships two benchmark sparsifiers adapted from
//! deterministic graph theory, an exact LP assignment for small instances,
//! and a Monte-Carlo evaluation harness.

pub mod backbone;
pub mod benchmarks;
mod dsu;
pub mod emd;
pub mod error;
pub mod eval;
pub mod gdb;
pub mod graph;
pub mod lp;
pub mod rng;

pub use dsu::DisjointSets;
pub use error::{Error, Result};
pub use graph::{DiscrepancyMode, Edge, EdgeId, UncertainGraph, VertexId, VertexSet};
