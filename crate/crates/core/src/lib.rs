//! HyperKG: translational knowledge-base embeddings in the Poincaré ball.
//!
//! Entities and relations live in the open unit ball. A fact `R(s, o)` is
//! scored by the hyperbolic distance between the term vector `s + Π_β o`
//! and the relation vector `r`, and the model is fit with a margin loss
//! under Riemannian SGD. Alongside the model the crate carries the dataset
//! plumbing, filtered link-prediction evaluation, a closure engine for the
//! two `is_a`/`part_of` rules used to build synthetic benchmarks, and
//! executable checks of the relation-region geometry.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod model;
pub mod rng;
pub mod rules;
pub mod training;
pub mod verification;

pub use error::{Error, Result};
