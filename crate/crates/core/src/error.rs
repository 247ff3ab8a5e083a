//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown orientation code `{0}`")]
    UnknownOrientation(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("volume contains non-finite voxel values")]
    NonFiniteVoxels,

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown lesion type `{0}`")]
    UnknownLesionType(String),

    #[error("unknown attribute option `{value}` for {attribute}")]
    UnknownOption { attribute: String, value: String },

    #[error("empty template pool for lesion `{lesion}` with modality `{modality}`")]
    EmptyPool { lesion: String, modality: String },

    #[error("lesion placement failed for organ `{organ}`: {reason}")]
    PlacementFailed { organ: String, reason: String },

    #[error("shape construction failed: {0}")]
    ShapeFailed(String),

    #[error("synthesis stage `{stage}` failed: {source}")]
    StageFailed {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("AUC undefined: labels contain a single class")]
    UndefinedAuc,

    #[error("test undefined: {0}")]
    UndefinedTest(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("predictor output shape mismatch in window at {window:?}: expected {expected} voxels, got {got}")]
    PredictorShape {
        window: [usize; 3],
        expected: usize,
        got: usize,
    },

    #[error("failed to load predictor `{0}`: {1}")]
    PredictorLoad(String, String),

    #[error("NIfTI error: {0}")]
    Nifti(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::StageFailed {
            stage,
            source: Box::new(self),
        }
    }
}
