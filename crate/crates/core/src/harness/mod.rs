//! Experiment harness behind the `rfsliding` command-line tool.

pub mod checks;
pub mod config;
pub mod csv;
pub mod experiment;
