//! Keyword-spotting noise-robustness kernels.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! builds without `std` (an allocator is required). File formats, corpus
//! ingestion and the command-line driver live in the `kws` crate.
//!
//! Module map:
//!
//! - [`signal`]: audio clips, white/pink/file-backed noise, SNR-exact mixing
//! - [`features`]: MFCC front-end for TC-ResNet8
//! - [`nn`]: dense tensors and the layer kernels with analytic gradients
//! - [`models`]: TC-ResNet8, SCN and Modified SCN plus parameter/MAC accounting
//! - [`training`]: SGD with step decay, best-validation selection, gradient checks
//! - [`experiments`]: 12-class datasets, known/unknown noise protocols, adaptive BN sweeps

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod experiments;
pub mod features;
pub mod models;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod training;

pub use error::{Error, Result};

/// Number of output classes: ten keywords, unknown, silence.
pub const NUM_CLASSES: usize = 12;

/// Sample rate every clip is canonicalized to.
pub const SAMPLE_RATE: u32 = 16_000;
