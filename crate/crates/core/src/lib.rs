//! Rent-to-value (RPV) analysis of census tracts: attribute ingest, queen
//! contiguity weights, descriptive statistics with Theil-Sen fits, spatial
//! lag regression by concentrated maximum likelihood, and a synthetic
//! lattice generator with planted parameters.

pub mod cli;
pub mod contiguity;
pub mod descriptive;
pub mod error;
pub mod format;
pub mod geometry;
pub mod ingest;
pub mod manifest;
pub mod pipeline;
pub mod rank;
pub mod sar;
pub mod synth;
pub mod table;
pub mod weights;

pub use error::{Error, Result};
