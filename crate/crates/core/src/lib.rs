//! Algorithms for benchmarking document embeddings on binary review
//! sentiment data: text cleaning, bag-of-words and latent semantic
//! features, word-vector aggregation, a small reverse-mode autodiff
//! engine with CNN/biLSTM classifiers, transformer token aggregation and
//! the cross-validated evaluation and rank-statistics protocol.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, IO and the
//! command line live in the `revembed` crate.

#![no_std]
// `!(x > 0.0)` deliberately treats NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bow;
pub mod corpus;
pub mod eval;
pub mod linalg;
mod math;
pub mod neural;
pub mod rng;
pub mod textprep;
pub mod tlmagg;
pub mod wordvec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
