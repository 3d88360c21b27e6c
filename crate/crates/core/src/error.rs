use std::path::PathBuf;

/// Errors produced anywhere in the shape pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },
    #[error("failed to decode raster {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("mask dimensions {width}x{height} are invalid (need at least 3x3 and {expected} flags)")]
    InvalidDimensions {
        width: usize,
        height: usize,
        expected: usize,
    },
    #[error("image has no foreground pixels")]
    EmptyForeground,
    #[error("no connected foreground component with area >= {min_area}")]
    NoComponent { min_area: usize },
    #[error("foreground component is thinner than 2 pixels everywhere")]
    ThinComponent,
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("polygon has zero area")]
    DegeneratePolygon,
    #[error("all points are collinear")]
    Collinear,
    #[error("sample polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("sample points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("triangulation failed: no ear found with {remaining} vertices left")]
    Triangulation { remaining: usize },
    #[error("all areas are zero")]
    ZeroArea,
    #[error("area {0} at index {1} is negative or not finite")]
    InvalidArea(f64, usize),
    #[error("histogram grids differ ({0} vs {1} bins)")]
    GridMismatch(usize, usize),
    #[error("descriptor has no histograms")]
    EmptyDescriptor,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("cost matrix format error: {0}")]
    MatrixFormat(String),
    #[error("descriptor format error: {0}")]
    DescriptorFormat(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("synthetic shape error: {0}")]
    Synth(String),
    #[error("shape {id}: {inner}")]
    Shape { id: String, inner: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    /// Wraps the error with the id of the shape it came from.
    pub fn for_shape(self, id: &str) -> Self {
        Error::Shape {
            id: id.to_string(),
            inner: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
