//! Configuration loading, experiment orchestration and CSV output for the
//! `lepsim` command-line tool.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::Figure;
pub use config::RunConfig;
