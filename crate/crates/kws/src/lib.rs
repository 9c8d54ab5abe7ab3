//! File formats, corpus ingestion and the command-line driver around
//! [`kws_core`].
//!
//! - [`wav`]: 16-bit mono 16 kHz WAV reading and writing
//! - [`ckpt`]: versioned binary checkpoint container
//! - [`report`]: CSV evaluation reports, confusion sidecars and training logs
//! - [`corpus`]: Speech Commands directory loader and noise directories
//! - [`config`]: `key = value` settings files
//! - [`cli`]: the `kws` subcommands

pub mod ckpt;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod fsutil;
pub mod report;
pub mod wav;

pub use error::{KwsError, Result};
