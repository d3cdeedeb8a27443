//! Error taxonomy for the command-line layer.
//!
//! Every failure is classified by who has to act: `Config` means the input
//! (config file, flags, run directory contents named by the user) must
//! change, and maps to exit code 2; `Failure` means the run itself broke —
//! a numeric blow-up, a checksum mismatch, an I/O fault — and maps to exit
//! code 3. Success is exit code 0.

use thiserror::Error;

/// Exit code for configuration and usage errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for runtime (numeric, integrity, I/O) failures.
pub const EXIT_FAILURE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// The user's inputs are wrong: unknown or malformed config key, invalid
    /// parameter value, missing run directory, missing emit inputs.
    #[error("{0}")]
    Config(String),

    /// The run failed after inputs were accepted: non-finite state, corrupt
    /// checkpoint, failed write.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

/// Shorthand for a configuration error naming the offending key.
pub fn config_err(key: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config key `{key}`: {reason}"))
}

/// Shorthand for a runtime failure.
pub fn fail(reason: impl std::fmt::Display) -> CliError {
    CliError::Failure(reason.to_string())
}

/// Wrap an I/O error with the path it concerned.
pub fn io_fail(path: &std::path::Path, err: std::io::Error) -> CliError {
    CliError::Failure(format!("{}: {err}", path.display()))
}

pub type Result<T> = std::result::Result<T, CliError>;
