//! Configuration, run outputs and the commands behind the CLI.
pub mod commands;
pub mod config;
pub mod matrix_io;
pub mod output;
pub mod validate;

pub use commands::{cmd_distribution, cmd_hopfield, cmd_mc, cmd_phase_diagram};
pub use config::{Overrides, RunConfig};
pub use output::RunOutput;
pub use validate::{cmd_validate, run_validation, ValidateOptions, ValidationReport};
