use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("could not parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unresolved oscillation: grid has {m} steps, need at least {required} for n = {n}")]
    UnresolvedOscillation { m: usize, n: usize, required: usize },
    #[error("grid mismatch: expected {expected} steps, got {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("clock reaches {reach} but the base path only covers [0, {horizon}]")]
    ClockExceedsHorizon { reach: f64, horizon: f64 },
    #[error("weight is not positive at y = {at} (value {value})")]
    NonPositiveWeight { at: f64, value: f64 },
    #[error("periodic function is not normalized: mean {mean}, mean square {mean_square}")]
    Unnormalized { mean: f64, mean_square: f64 },
    #[error("rotation schedule is not orthogonal (defect {defect:e})")]
    NotOrthogonal { defect: f64 },
    #[error("system outside the supported class: {0}")]
    UnsupportedSystem(String),
    #[error("coefficient overflow at step {step}")]
    CoefficientOverflow { step: usize },
    #[error("kernel tuple {0:?} is not strictly increasing inside the grid")]
    OffSimplex(Vec<usize>),
    #[error("I/O failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
