//! Refinement and spectral reasoning over natural-language fact graphs.
//!
//! A [`graph::ReasoningGraph`] of propositions flows through a fixed chain of
//! stages: embedding, semantic merging, entailment scoring and filtering,
//! knowledge-graph alignment, Chebyshev spectral propagation of the belief
//! signal, and thresholded inference. Every stage is available on its own and
//! through the [`pipeline`] driver.

pub mod align;
pub mod entail;
pub mod error;
pub mod graph;
pub mod inference;
pub mod merge;
pub mod pipeline;
pub mod providers;
pub mod spectral;
pub mod text;

pub use error::{Error, Result};
