//! Policy-guided heuristic search.
//!
//! The crate provides a generic best-first search engine driven by pluggable
//! evaluation functions (A*, weighted A*, GBFS, LevinTS and the PHS family),
//! a PUCT baseline, a small two-headed policy/heuristic network trained with
//! hand-written backpropagation and Adam, the Bootstrap train/test loop, a set
//! of benchmark domains, and a verification lab that checks the search-loss
//! bounds against exhaustive oracles on synthetic trees.

pub mod bootstrap;
pub mod domains;
pub mod evaluators;
pub mod model;
pub mod puct;
pub mod search;
pub mod solver;
pub mod theory;

mod error;

pub use error::{Error, Result};
