use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported dimension {0} (only 2 and 3 are supported)")]
    UnsupportedDimension(usize),
    #[error("extent along axis {axis} must be positive, got {value}")]
    NonPositiveExtent { axis: usize, value: f64 },
    #[error("axis {axis} has {nodes} nodes, at least 3 are required")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("value count {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },
    #[error("ball (center {center:?}, radius {radius}) is not contained in the grid domain")]
    BallOutsideDomain { center: [f64; 3], radius: f64 },
    #[error("point {0:?} lies outside the grid domain")]
    PointOutsideDomain([f64; 3]),
    #[error("grid functions live on different domains")]
    DomainMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("iteration cap of {cap} reached with residual {residual:e} above tolerance {tol:e}")]
    NotConverged { cap: usize, residual: f64, tol: f64 },
    #[error("|lambda * phi| = {value} >= 1 at node {index}")]
    InadmissibleScaling { index: usize, value: f64 },
    #[error("competitor differs from the base function at node {index} outside the ball")]
    CompetitorOutsideBall { index: usize },
    #[error("solver diverged in stage {stage}: J_eps grew from {start} to {end}")]
    Divergence { stage: usize, start: f64, end: f64 },
    #[error("no valid sample points: {0}")]
    NoSamples(String),
    #[error("center value |u(x)| = {value:e} exceeds the zero tolerance {tol:e}")]
    CenterNotOnZeroSet { value: f64, tol: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
