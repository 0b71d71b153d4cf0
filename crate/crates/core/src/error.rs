use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("point |x| = {norm} outside domain radius {radius}")]
    Domain { norm: f64, radius: f64 },
    #[error("singular matrix (condition estimate {cond:e})")]
    Singular { cond: f64 },
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("regularity violated: {0}")]
    Regularity(String),
    #[error("s = {s} outside validity interval (-{limit}, {limit})")]
    OutsideValidity { s: f64, limit: f64 },
    #[error("quadrature did not converge (error estimate {estimate:e}, tolerance {tol:e})")]
    Quadrature { estimate: f64, tol: f64 },
    #[error("series did not converge after {terms} terms")]
    SeriesTruncation { terms: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
