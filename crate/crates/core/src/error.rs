use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance file {path}: {msg}")]
    InstanceParse { path: PathBuf, msg: String },

    #[error("horizon {horizon} exceeds the {phase_cap}-late-phase cap (max {max} epochs)")]
    HorizonCap {
        horizon: u64,
        phase_cap: u32,
        max: u64,
    },

    /// Gap of zero or a bound evaluated outside its domain.
    #[error("{0}")]
    Domain(String),

    #[error("n = {n} too small: p*V*ln(n)/n + (1-p) = {value:.6} must be < 1")]
    NTooSmall { n: u64, value: f64 },

    #[error("run did not advance past wall time {needed:.3} (stopped at {reached:.3})")]
    Undetermined { needed: f64, reached: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InstanceParse { .. }
            | Error::Domain(_)
            | Error::NTooSmall { .. }
            | Error::Undetermined { .. } => 2,
            Error::Io { .. } | Error::Csv(_) => 3,
            Error::HorizonCap { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
