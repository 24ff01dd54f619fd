//! Topic-model stability tuning: preprocessing, collapsed-Gibbs LDA, the
//! order-shuffled stability score, a differential-evolution tuner with a
//! random-search baseline, a downstream linear classifier harness, and the
//! statistical machinery (A12, bootstrap, Scott-Knott) used to compare runs.
//!
//! The `cli` module wires everything into a batch command-line tool; the rest
//! of the crate is an ordinary library and has no I/O besides explicit
//! load/save helpers.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod lda;
pub mod report;
pub mod seeds;
pub mod stability;
pub mod stats;
pub mod synth;
pub mod tuner;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
