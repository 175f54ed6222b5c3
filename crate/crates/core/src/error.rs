use std::io;

use thiserror::Error;

use crate::sketch::SketchConfig;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sketch configurations differ: {left:?} vs {right:?}")]
    ConfigMismatch {
        left: Box<SketchConfig>,
        right: Box<SketchConfig>,
    },

    #[error("sketches were built with different seeds")]
    SeedMismatch,

    #[error("invalid sketch configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bottom-k sketch holds {have} values but the statistic needs {need}")]
    Underflow { have: usize, need: usize },

    #[error("estimator {estimator} cannot be applied to a {kind} sketch")]
    IncompatibleEstimator {
        estimator: &'static str,
        kind: &'static str,
    },

    #[error("subset does not determine a complete rank sketch: {0}")]
    IncompleteSketch(String),

    #[error("ground set of {n} keys is too small: {needed}")]
    GroundSetTooSmall { n: usize, needed: String },

    #[error("malformed serialized sketch: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
