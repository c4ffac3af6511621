//! Benchmark toolkit for measuring how the choice of numerical
//! differentiation method propagates into data-driven equation discovery.
//!
//! The pipeline is: generate a benchmark solution ([`datasets`]), corrupt it
//! with proportional noise ([`grid::add_noise`]), estimate a jet of partial
//! derivatives with one of six backends ([`diffmethods`]), search for a
//! sparse equation over a term library ([`discovery`]), and score the result
//! against the known equation ([`metrics`]). [`bench`] runs the whole matrix
//! from a config file.

pub mod bench;
pub mod datasets;
pub mod diffmethods;
pub mod discovery;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod metrics;

pub use error::{Error, Result};
