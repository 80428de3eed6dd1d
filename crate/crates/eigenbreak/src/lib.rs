//! Experiment harness, file formats and command-line front end for the
//! `eigenbreak-core` change-point tests.

pub mod analyze;
pub mod config;
mod error;
pub mod harness;
pub mod ingest;
pub mod output;
pub mod quantiles;
pub mod synth;

pub use error::{Error, Result};
