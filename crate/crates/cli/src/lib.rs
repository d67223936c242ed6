//! Configuration-driven front end for the `antiblockade` simulator.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;
