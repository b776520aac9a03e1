//! Command-line orchestration for the fault2flow toolchain: lint, translate,
//! compile, execute, test-generate, verify, measure, evolve, push, or run
//! the whole pipeline over a file-based project directory.

pub mod client;
pub mod commands;
pub mod config;
pub mod error;

pub use error::CliError;
