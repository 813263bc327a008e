//! Command-line front end: run configuration, subcommands and the camelback
//! demonstration pipeline.

pub mod commands;
pub mod config;
pub mod error;
pub mod propagate;

pub use commands::{main_with_args, Cli};
pub use error::{Failure, EXIT_NUMERIC, EXIT_USAGE};
