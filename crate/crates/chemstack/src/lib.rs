//! Command-line front end and file formats for `chemstack-core`: scenario
//! files, CSV artifacts, reaction-file analysis.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod output;

use chemstack_core::sim::SimError;

/// Environment variable overriding the output directory.
pub const ENV_OUT: &str = "CHEMSTACK_OUT";
/// Environment variable overriding the seed.
pub const ENV_SEED: &str = "CHEMSTACK_SEED";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    /// 2 for configuration errors, 3 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Runtime(_) => 3,
        }
    }
}

impl From<SimError> for Error {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => Error::Config(m),
            SimError::Runtime(m) => Error::Runtime(m),
        }
    }
}
