//! Experiment runner: snapshot generation, ROM construction, training runs
//! and reproduction of the published result tables on top of the `dispinn` library.

pub mod commands;
pub mod config;
mod error;
pub mod tables;

pub use error::CliError;
