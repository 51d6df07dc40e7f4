use thiserror::Error;

use crate::numerics::NumericsError;

/// Errors from GP fitting and prediction (homoscedastic and MLHGP).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("log marginal likelihood is not finite at the initial hyperparameters")]
    NonFiniteLikelihood,
    #[error("predictive variance at index {index} is not positive ({variance})")]
    NonPositiveVariance { index: usize, variance: f64 },
    #[error("EM iteration {iteration} produced a non-finite marginal likelihood")]
    EmDiverged { iteration: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcquisitionError {
    #[error("empty domain: lower bound must be below upper bound in every dimension")]
    EmptyDomain,
    #[error("invalid acquisition: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("insufficient data: need at least {needed} rows, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("query {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),
    #[error("every pool point has been consumed")]
    PoolExhausted,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}
