use std::fmt;

/// Sub-step of an iteration, used to name where a non-finite value appeared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substep {
    /// Optimality step on the primary objective.
    Primary,
    /// Optimality step on the secondary objective.
    Secondary,
    /// Feasibility step.
    Feasibility,
    /// Extrapolation (momentum) step of the accelerated solvers.
    Extrapolation,
}

impl fmt::Display for Substep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Substep::Primary => "primary optimality step",
            Substep::Secondary => "secondary optimality step",
            Substep::Feasibility => "feasibility step",
            Substep::Extrapolation => "extrapolation step",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite iterate at iteration {iteration} after the {step}")]
    NonFinite { iteration: usize, step: Substep },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window has zero total step weight")]
    ZeroWeight,

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
