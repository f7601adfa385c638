use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector norm {norm:e} is below the degeneracy threshold")]
    DegenerateVector { norm: f64 },

    #[error("rotation angle {angle} rad is too close to pi for a unique logarithm")]
    NearPiRotation { angle: f64 },

    #[error("matrix is not a proper rotation: {0}")]
    NotARotation(String),

    #[error("palm keypoints are degenerate (coincident or collinear)")]
    DegenerateKeypoints,

    #[error("required keypoint `{0}` is missing")]
    MissingKeypoint(String),

    #[error("fingertip tripod is degenerate (collinear tips)")]
    DegenerateTripod,

    #[error("thumb tip lies on the tripod axis")]
    ThumbOnAxis,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid hand model: {0}")]
    InvalidModel(String),

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("joint vector must have exactly 16 entries, got {0}")]
    JointVectorLength(usize),

    #[error("angle series are not aligned on identical timestamps")]
    MisalignedSeries,

    #[error("no frame is active in both series")]
    EmptyMask,

    #[error("signal has (near) zero standard deviation")]
    DegenerateSignal,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Errors caused by bad user input (files, configs) rather than by the
    /// numerics of a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ConfigInvalid(_)
                | Error::InvalidModel(_)
                | Error::InvalidTrajectory(_)
                | Error::MissingKeypoint(_)
                | Error::JointVectorLength(_)
                | Error::Json(_)
                | Error::Parse(_)
                | Error::MisalignedSeries
        )
    }
}
