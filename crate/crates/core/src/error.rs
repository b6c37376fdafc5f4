use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("three-form is degenerate: {0}")]
    DegenerateForm(String),

    #[error("metric is singular (smallest singular value {0:e})")]
    SingularMetric(f64),

    #[error("inadmissible triple: {0}")]
    BadTriple(String),

    #[error("loop has {got} samples, at least {min} required")]
    TooFewSamples { got: usize, min: usize },

    #[error("loop is not immersed: |γ'| = {speed:e} at sample {index}")]
    NotImmersed { index: usize, speed: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("field is not normal to the loop at sample {index} (relative defect {defect:e})")]
    NotNormal { index: usize, defect: f64 },

    #[error("consecutive Lagrangian planes too far apart at sample {index} (angle {angle:.3} rad)")]
    NyquistViolation { index: usize, angle: f64 },

    #[error("frame field cannot be trivialized: {0}")]
    NonTrivializable(String),

    #[error("bad cycle: {0}")]
    BadCycle(String),

    #[error("Maslov index of the fiber cycle is odd ({0}); the marking is not orientable")]
    OddSTwist(i64),

    #[error("relative index depends on the slice: {0:?}")]
    SliceDependence(Vec<i64>),

    #[error("no intersection for offset {0}")]
    NoIntersection(f64),

    #[error("invalid homotopy data: {0}")]
    InvalidHomotopy(String),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
