//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by fitting, filtering and I/O operations.
#[derive(Debug, Error)]
pub enum Error {
    /// The input geometry does not determine the model (collinear points,
    /// coincident points, too little spread).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    /// Fewer samples than the operation requires.
    #[error("insufficient samples: got {got}, need {need}")]
    InsufficientSamples { got: usize, need: usize },

    /// A revolute point projects onto the circle center; its angle is undefined.
    #[error("singular projection: point projects onto the revolute center")]
    SingularProjection,

    /// Temporal model order or time step out of range.
    #[error("invalid order: n = {n}, dt = {dt}")]
    InvalidOrder { n: usize, dt: f64 },

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Innovation covariance is not invertible.
    #[error("singular innovation covariance")]
    SingularInnovation,

    /// A model prior does not match the candidate count or does not sum to one.
    #[error("invalid prior: {0}")]
    InvalidPrior(&'static str),

    /// Every candidate's likelihood underflowed the floor for this observation.
    #[error("all candidate models implausible for this observation")]
    AllModelsImplausible,

    /// Prediction requested before any model was committed.
    #[error("no model committed for this track")]
    NotCommitted,

    /// An observation names a landmark id the filter has never seen.
    #[error("unknown landmark id {0}")]
    UnknownLandmark(u64),

    /// Simulation time outside the scenario schedule.
    #[error("time {t} outside scenario schedule [0, {duration}]")]
    OutOfSchedule { t: f64, duration: f64 },

    /// Pose series lengths differ where they must match.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A CSV row failed to parse.
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    /// Frames within one track are not strictly increasing.
    #[error("non-monotone frames for track {track_id} at line {line}")]
    NonMonotoneFrames { track_id: u64, line: usize },

    /// Scenario file failed validation.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
