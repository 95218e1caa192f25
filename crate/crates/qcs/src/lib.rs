//! Quantum circuit search workbench: on-disk formats, run configuration and
//! the generate → score → train-eval → correlate pipeline built on
//! [`qcs_core`].

pub mod config;
pub mod dataset;
mod error;
pub mod genome;
pub mod pipeline;
pub mod plot;
pub mod tables;

pub use error::FormatError;
