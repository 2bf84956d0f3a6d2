use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid scenario: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation { violations: Vec<crate::config::Violation> },

    #[error("carbon trace gap: hour {hour} missing for region '{region}'")]
    Gap { hour: u32, region: String },

    #[error("value out of range at line {line}: {message}")]
    Range { line: usize, message: String },

    #[error("time {t_hours} h is outside the trace horizon of {horizon_hours} h")]
    OutOfRange { t_hours: f64, horizon_hours: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mode {mode} for element kind {kind}")]
    InvalidMode { kind: String, mode: String },

    #[error("no traffic delivered; gCO2e per GB is undefined")]
    ZeroTraffic,

    #[error("run consumed no energy; renewable utilization is undefined")]
    EmptyRun,

    #[error("insufficient history: need at least {needed} hours, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("plan horizon {plan} h exceeds forecast horizon {forecast} h")]
    HorizonMismatch { plan: usize, forecast: usize },

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("policy file required for mpc_rl runs: {0}")]
    MissingPolicyFile(String),

    #[error("rain event {0} not found in run")]
    EventNotFound(usize),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
