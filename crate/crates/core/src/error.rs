use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("point coincides with RIS element {index}")]
    DegenerateGeometry { index: usize },
    #[error("length mismatch: expected {expected} elements, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("phase set must contain at least one value")]
    EmptyPhaseSet,
    #[error("beam count {beams} exceeds the {lines} available element lines")]
    TooManyBeams { beams: usize, lines: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ranges r1={r1} m, r2={r2} m are inconsistent with a {baseline} m anchor baseline")]
    Triangulation { r1: f64, r2: f64, baseline: f64 },
    #[error("phase matching needs a nonempty candidate grid")]
    EmptyCandidates,
}

pub type Result<T> = std::result::Result<T, Error>;
