//! Verification and Monte-Carlo commands behind the `probtele` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod stats;

pub use commands::{
    cmd_run, cmd_sweep, cmd_verify_barenco, cmd_verify_eq36, cmd_verify_outcomes, cmd_verify_u0,
    cmd_verify_u0_with,
};
pub use config::RunConfig;
pub use report::{Check, Report, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] probtele::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_FAIL,
        }
    }
}
