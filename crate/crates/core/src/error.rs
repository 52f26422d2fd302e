use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must be at least 2x2, got {width}x{height}")]
    GridTooSmall { width: usize, height: usize },

    #[error("field has {got} values, grid needs {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("degenerate tensor (det = {det:e})")]
    DegenerateTensor { det: f64 },

    #[error("tensor at pixel ({x}, {y}) is not positive definite")]
    NotPositiveDefinite { x: usize, y: usize },

    #[error("metric evaluated on the zero vector")]
    ZeroVector,

    #[error("point ({x}, {y}) lies outside the {width}x{height} grid")]
    OutOfGrid { x: i64, y: i64, width: usize, height: usize },

    #[error("invalid seeds: {0}")]
    InvalidSeeds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("positivity constraint violated at pixel ({x}, {y}): |omega|_(M^-1) = {ratio}")]
    PositivityViolated { x: usize, y: usize, ratio: f64 },
}
