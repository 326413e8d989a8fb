use thiserror::Error;

/// Failure modes shared across the simulator, feature extraction, estimators
/// and the training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("geometry violation: {0}")]
    GeometryViolation(String),
    #[error("resolution failure: {0}")]
    ResolutionFailure(String),
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("model incompatible: {0}")]
    ModelIncompatible(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("inconsistent estimates: {0}")]
    InconsistentEstimates(String),
    #[error("step failure: {0}")]
    StepFailure(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "invalid-geometry",
            Error::GeometryViolation(_) => "geometry-violation",
            Error::ResolutionFailure(_) => "resolution-failure",
            Error::SolverFailure(_) => "solver-failure",
            Error::DegenerateInput(_) => "degenerate-input",
            Error::ModelIncompatible(_) => "model-incompatibility",
            Error::DegenerateDataset(_) => "degenerate-dataset",
            Error::FitFailure(_) => "fit-failure",
            Error::InconsistentEstimates(_) => "inconsistent-estimates",
            Error::StepFailure(_) => "step-failure",
            Error::Config(_) => "config-error",
            Error::Io(_) => "io-error",
            Error::Json(_) => "parse-error",
        }
    }

    /// Process exit status: 2 for configuration and input problems, 4 for
    /// geometry violations, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::ModelIncompatible(_) => 2,
            Error::InvalidGeometry(_) | Error::GeometryViolation(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
