use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate rotation axis (zero length)")]
    DegenerateAxis,

    #[error("moments of inertia must be positive and finite, got ({0}, {1}, {2})")]
    InvalidInertia(f64, f64, f64),

    #[error("noise axes must span R^3")]
    DegenerateNoiseAxes,

    #[error("singular stationary measure: sigma = 0 with theta > 0 concentrates on the minimal-energy poles")]
    SingularMeasure,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("tangent vector has no component in the tangent plane")]
    DegenerateTangent,

    #[error("initial momentum must be nonzero")]
    ZeroMomentum,

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
