//! Command-line front end for driftwatch: experiment configuration,
//! pipeline execution and report emission.

pub mod charts;
pub mod commands;
pub mod config;
mod error;
pub mod output;

pub use error::{CliError, Result};
