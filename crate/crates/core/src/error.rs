use alloc::string::String;

/// Every failure the pure algorithms can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("non-finite point position at index {0}")]
    NonFinite(usize),
    #[error("attribute column `{column}` has {found} entries, expected {expected}")]
    AttributeLength { column: &'static str, expected: usize, found: usize },
    #[error("point clouds cannot be concatenated: {0}")]
    IncompatibleClouds(&'static str),
    #[error("timestamp {t} outside interpolation interval [{t0}, {t1}]")]
    OutOfRange { t: i64, t0: i64, t1: i64 },
    #[error("boxes belong to different tracks or classes")]
    TrackMismatch,
    #[error("track has no samples")]
    EmptyTrack,
    #[error("timestamps are not strictly increasing at {0}")]
    NonMonotonicTimestamps(i64),
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("no correspondences within the maximum correspondence distance")]
    NoCorrespondences,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no annotated keyframes available: {0}")]
    MissingKeyframes(String),
    #[error("no ground plane satisfies the normal constraint")]
    NoGroundFound,
    #[error("label code {0} is outside the code table")]
    InvalidLabelCode(u8),
    #[error("unknown label name `{0}`")]
    UnknownLabelName(String),
    #[error("label array has {found} entries, cloud has {expected} points")]
    LabelLengthMismatch { expected: usize, found: usize },
    #[error("no aggregate for track {0}")]
    MissingAggregate(u32),
    #[error("point cloud carries no semantic labels")]
    MissingLabels,
    #[error("keyframe {0} has no annotations")]
    MissingAnnotations(i64),
    #[error("keyframe {0} has no static labels")]
    MissingStaticLabels(i64),
    #[error("ground truth and prediction frame sets differ")]
    FrameSetMismatch,
    #[error("prediction box without a score in frame {0}")]
    MissingScore(i64),
    #[error("grids differ in origin, voxel size or dimensions")]
    GridShapeMismatch,
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("frame source failed on frame {frame}: {message}")]
    Source { frame: usize, message: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    /// True for failures caused by the data source rather than by the data.
    pub fn is_source(&self) -> bool {
        matches!(self, Error::Source { .. })
    }
}
