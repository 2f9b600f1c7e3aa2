//! Per-unit discrimination scores for tabular data.
//!
//! Two families of scores are provided:
//!
//! * [`cem`]: repeated sequential coarsened exact matching. Every unit is
//!   compared with the unprotected units that share its coarsened values on a
//!   progressively longer prefix of a random variable ordering; the score is
//!   averaged over many orderings.
//! * [`knn`]: a Gower-distance k-nearest-neighbour baseline comparing the
//!   outcome frequencies among a unit's protected and unprotected neighbours.
//!
//! Around these sit a minimal CART [`tree`], the [`scenario`] generators used
//! to remove or inject discrimination, dataset-level parity [`metrics`], and
//! the repair/retrain [`evaluation`] harness.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! spread repetitions and per-unit work over a rayon pool; results do not
//! depend on the number of threads.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod cem;
pub mod dataset;
mod error;
pub mod evaluation;
pub mod knn;
pub mod metrics;
mod par;
pub mod scenario;
pub mod score;
pub mod seed;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
