use thiserror::Error;

/// Errors from special functions and the closed-form Weibull primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("{what}: argument {value} outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("{what}: result for argument {value} is not representable")]
    Range { what: &'static str, value: f64 },
    #[error("moment of order {order} does not exist for shape {shape}")]
    MomentDoesNotExist { order: f64, shape: f64 },
    #[error("invalid Weibull parameters: shape {shape}, scale {scale} (both must be positive and finite)")]
    InvalidParams { shape: f64, scale: f64 },
}

/// Errors from the likelihood solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("sample is empty")]
    EmptySample,
    #[error("observation {index} is {value}; every observation must be positive and finite")]
    NonPositiveObservation { index: usize, value: f64 },
    #[error("degenerate sample: fewer than two distinct values, the likelihood has no finite maximum")]
    DegenerateSample,
    #[error("could not bracket the root after {doublings} doublings")]
    BracketFailure { doublings: usize },
    #[error("no convergence after {iterations} iterations (|h| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// Configuration errors for the Monte Carlo engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("sample size n = {0} is below 2")]
    SampleSizeTooSmall(usize),
    #[error("shape {0} must be positive and finite")]
    InvalidShape(f64),
    #[error("replication count {0} is below 100")]
    TooFewReplications(usize),
    #[error("repeat study needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("M·p = {0} is below 1, no order statistic to pick")]
    QuantileBelowFirst(f64),
    #[error("empty sample set")]
    Empty,
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("could not draw a usable sample for replication {replication}")]
    RedrawExhausted { replication: usize },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
    #[error("solver tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Errors from moment matching and the regression surrogates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("mean {mean} and variance {var} must both be positive")]
    InvalidMoments { mean: f64, var: f64 },
    #[error("coefficient of variation {0} is outside the representable shape range [1e-2, 1e4]")]
    ShapeOutOfRange(f64),
    #[error("model {model} needs at least {needed} rows, got {got}")]
    InsufficientData { model: char, needed: usize, got: usize },
    #[error("row with n = {n} is outside the model domain: {reason}")]
    DomainViolation { n: f64, reason: &'static str },
    #[error("duplicate (n, delta) pair ({n}, {delta})")]
    DuplicateRow { n: f64, delta: f64 },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("model {model} did not converge; best profiled coefficients {best:?}")]
    NoConvergence { model: char, best: Vec<f64> },
    #[error("responses have zero total variation")]
    ZeroVariation,
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("normality test needs at least 8 values, got {0}")]
    TooFewResiduals(usize),
    #[error("values are constant")]
    Degenerate,
    #[error("malformed surface data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Math(#[from] MathError),
}
