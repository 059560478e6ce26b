//! Library side of the `modalfuse` command-line tool: config parsing, grid
//! execution, result files, and the statistical comparison report. The
//! binary in `main.rs` is a thin argument-parsing shell over [`commands`].

pub mod commands;
pub mod compare;
pub mod config;
pub mod grid;
pub mod report;
