use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZenoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The spectral exponential was requested for a (near-)degenerate
    /// eigensystem; callers fall back to the series exponential.
    #[error("degenerate spectrum: eigenvalue gap {gap:e} below threshold {threshold:e}")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("no stationary state: {0}")]
    NoStationaryState(String),

    /// The first-order expansion does not apply to the requested parameters.
    #[error("outside the measurement regime: {}", .0.join("; "))]
    Regime(Vec<String>),

    #[error("schedule error: {0}")]
    Schedule(String),

    /// A bound that holds analytically was violated. Signals a bug.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl ZenoError {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ZenoError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZenoError::Config { .. } | ZenoError::InvalidArgument(_) => 2,
            ZenoError::Schedule(_) | ZenoError::Regime(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = ZenoError> = std::result::Result<T, E>;
