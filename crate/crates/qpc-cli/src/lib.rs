//! Experiment runner and figure-data emitter for the comparison-protocol
//! simulator: configuration handling, trial execution, and table output.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod sweep;
