//! Library half of the `heatbath` binary: config, manifest, and the eight
//! experiment runners. The binary crate adds only flag parsing and exit-code
//! mapping on top of this.

use std::fmt;

pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

/// Build version embedded by the build script: the package version, plus
/// the `git describe` string when the build happened inside a work tree.
pub const VERSION: &str = env!("BUILD_VERSION");

/// CLI-level errors, split by exit code:
/// - `Config` (and toolkit parameter/sample-size rejections) exit 2,
/// - a failed acceptance check exits 3 (signalled by the run result, not an
///   error),
/// - toolkit numerical failures exit 4,
/// - I/O trouble exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Lib(heatbath::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Lib(heatbath::Error::InvalidParam(_))
            | CliError::Lib(heatbath::Error::InsufficientSamples(_)) => 2,
            CliError::Lib(heatbath::Error::Numerical(_)) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config: {msg}"),
            CliError::Io(msg) => write!(f, "io: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<heatbath::Error> for CliError {
    fn from(e: heatbath::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
