//! Library surface of the `qmatch` command-line tool: run-configuration
//! parsing and the subcommand implementations, kept in a library so tests
//! and fuzz targets can drive them directly.

pub mod commands;
pub mod config;
