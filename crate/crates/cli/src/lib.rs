//! File formats and the `coherence` command-line front end.

pub mod commands;
pub mod config;
pub mod inputs;
pub mod output;

pub use commands::{run, Cli};
