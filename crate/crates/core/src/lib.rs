//! Feature-fusion classification with discriminative tree graphical models.
//!
//! The pipeline learns a pair of tree-structured class-conditional models
//! per feature set, concatenates them into a disjoint forest pair, and
//! thickens the graphs by boosting: each round re-learns a discriminative
//! tree pair on re-weighted data and contributes its edges and a weighted
//! vote to the final likelihood-ratio classifier. Multi-class problems are
//! handled one-vs-all with optional outlier rejection.

pub mod boost;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
