//! Configuration, file formats and the run commands behind the CLI.

mod commands;
pub mod config;
pub mod io;

pub use commands::{cmd_bogovskii, cmd_certificate, cmd_gcc, cmd_simulate, cmd_verify, domain_preset, Outcome, Setup};
pub use config::RunConfig;
