use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("error reduction undefined: single-model error is zero")]
    UndefinedReduction,

    #[error("density is singular at the support endpoint w = {0}")]
    EndpointSingularity(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: non-positive pivot {value:e} at row {pivot}")]
    Singular { pivot: usize, value: f64 },

    #[error("cannot scale matrix: {0}")]
    CannotScale(String),

    #[error("reservoir state diverged at step {step}")]
    DivergedState { step: usize },

    #[error("prediction diverged at step {step} (|y| = {value:e})")]
    DivergedPrediction { step: usize, value: f64 },

    #[error("generator diverged at step {step}")]
    GeneratorDiverged { step: usize },

    #[error("degenerate scaling: {0}")]
    DegenerateScaling(String),

    #[error("model has no trained readout")]
    Untrained,

    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// True for the divergence family, which experiment runs record as data.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::DivergedState { .. }
            | Error::DivergedPrediction { .. }
            | Error::GeneratorDiverged { .. } => true,
            Error::Member { source, .. } => source.is_divergence(),
            _ => false,
        }
    }

    /// Step index of a divergence, if this error is one.
    pub fn diverged_at(&self) -> Option<usize> {
        match self {
            Error::DivergedState { step }
            | Error::DivergedPrediction { step, .. }
            | Error::GeneratorDiverged { step } => Some(*step),
            Error::Member { source, .. } => source.diverged_at(),
            _ => None,
        }
    }
}
