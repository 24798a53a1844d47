use std::fmt;

use evtestbed::data::DataError;
use evtestbed::harness::{ConfigError, HarnessError};

/// Exit status classes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad values, or input files that do not parse.
    Config(String),
    /// Files that cannot be read or written, sockets that cannot be bound.
    Io(String),
}

impl CliError {
    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn io(msg: impl fmt::Display) -> Self {
        CliError::Io(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        if e.is_io() {
            CliError::io(e)
        } else {
            CliError::config(e)
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e)
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Data(d) => d.into(),
            other => CliError::config(other),
        }
    }
}
