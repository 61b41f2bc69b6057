//! Polya urn modelling of epidemic waves.

pub mod cli;
pub mod config;
pub mod distributions;
pub mod fixture;
mod float_serde;
pub mod ingestion;
pub mod pipeline;
pub mod reference;
pub mod rng;
pub mod segmentation;
pub mod special;
pub mod stats_tests;
pub mod urn;
