//! Allocation-only kernel for training-free quantum circuit search.
//!
//! Everything here is a pure function of its inputs: statevector and
//! density-matrix simulation, device-aware candidate generation, Clifford
//! noise resilience (CNR), representational-capacity (RepCap) scoring,
//! parameter-shift training and the evaluation metrics used to correlate
//! proxy scores with trained performance. File formats, orchestration and
//! the command line live in the `qcs` crate.
//!
//! Basis states are little-endian: qubit 0 is the least significant bit of
//! the amplitude index.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod circuit;
pub mod data;
mod error;
pub mod metrics;
pub mod noise;
pub mod scoring;
pub mod seed;
pub mod sim;
pub mod tolerance;
pub mod trainer;

pub use error::{Error, Result};
pub use num_complex::Complex64;
