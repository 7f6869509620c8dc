//! Semi-random matchings in hypergraphs.
//!
//! The crate runs the nibble process with waste vertices on near-regular
//! simple hypergraphs, augments the resulting matching along augmenting
//! stars, reduces codegree-bounded hypergraphs to simple ones, and turns
//! matchings of an incidence hypergraph into edge colorings. Every stage
//! ships with an audit so that runs can be checked against the quantities
//! the process is supposed to concentrate around.

pub mod augment;
pub mod chromatic;
pub mod generators;
pub mod harness;
pub mod hypergraph;
pub mod nibble;
pub mod rng;
pub mod simplify;

pub use hypergraph::{Hypergraph, HypergraphBuilder, HypergraphError, Matching, MatchingReport, Part, PartiteTag};
