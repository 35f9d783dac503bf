use teichlab_core::LabError;
use thiserror::Error;

/// Exit status for a run whose checks all pass.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one acceptance criterion does not pass.
pub const EXIT_CRITERION_FAILURE: i32 = 1;
/// Exit status for configuration and runtime errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config_invalid: {0}")]
    ConfigInvalid(String),
    #[error("cache_corrupt: {0}")]
    CacheCorrupt(String),
    #[error("io_error: {0}")]
    Io(String),
    #[error("{code}: {0}", code = .0.code())]
    Lab(#[from] LabError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
