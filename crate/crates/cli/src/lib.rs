//! Command-line front end: configuration, subcommands and output writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
