//! Harness for reproducible sheath experiments: configuration, run
//! orchestration, persistence, and the command-line interface.

pub mod cli;
pub mod config;
pub mod manifest;
pub mod runner;
