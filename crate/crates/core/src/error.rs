use thiserror::Error;

/// Invalid model, distribution or rule inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("delay and probability lists must be non-empty")]
    Empty,
    #[error("{delays} delays but {probs} probabilities")]
    LengthMismatch { delays: usize, probs: usize },
    #[error("delay {0} is not strictly positive and finite")]
    NonPositiveDelay(f64),
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("probabilities sum to {0}, expected 1 within 1e-9")]
    ProbSumMismatch(f64),
    #[error("rule {rule} needs at least 2 delays, distribution has {m}")]
    RuleArityMismatch { rule: &'static str, m: usize },
    #[error("fixed expansion point must be positive and finite, got {0}")]
    InvalidFixedDelay(f64),
    #[error("invalid interval [{a}, {b}]: need 0 < a < b")]
    InvalidInterval { a: f64, b: f64 },
    #[error("number of discretization points must be at least 1")]
    EmptyDiscretization,
    #[error("parameter {name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("queue model needs at least 2 queues, got {0}")]
    TooFewQueues(usize),
    #[error("history has {got} components, expected {expected}")]
    HistoryLength { got: usize, expected: usize },
}

/// Failures of the closed-form critical delay formulas.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no stability switch: C^2 <= alpha0^2, stability does not depend on the delay")]
    NoStabilitySwitch,
    #[error("neutral approximation degenerate: A1^2 = {0} >= 1")]
    NeutralDegenerate(f64),
    #[error("second-derivative frequency equation has negative discriminant {0}")]
    ComplexOmega(f64),
    #[error("selected squared frequency {0} is not positive")]
    NegativeOmegaSquared(f64),
    #[error("cosine argument {0} outside [-1, 1]")]
    ArccosDomain(f64),
}

/// Integrator failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step {h} exceeds a quarter of the smallest delay {min_delay}")]
    StepTooLarge { h: f64, min_delay: f64 },
    #[error("invalid integration horizon {0}")]
    InvalidHorizon(f64),
    #[error("invalid step size {0}")]
    InvalidStep(f64),
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
}

/// Root-finding failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Lambert W iteration did not converge for branch {branch} at {re}+{im}i")]
    NoConvergence { branch: i32, re: f64, im: f64 },
    #[error("Lambert W branch {0} is undefined at zero")]
    BranchAtZero(i32),
    #[error("root search exhausted: {0}")]
    SearchExhausted(String),
    #[error("root residual {0} exceeds tolerance")]
    ResidualTooLarge(f64),
}

/// Sweep and accuracy failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("maps are defined on different grids")]
    GridMismatch,
    #[error("probability vector has {probs} entries but grid has {dims} dimensions")]
    DimensionMismatch { probs: usize, dims: usize },
}

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
}

impl Error {
    /// Short machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Model(e) | Error::Approx(ApproxError::Model(e)) => model_kind(e),
            Error::Integrate(IntegrateError::Model(e))
            | Error::Spectral(SpectralError::Model(e))
            | Error::Sweep(SweepError::Model(e)) => model_kind(e),
            Error::Approx(e) => match e {
                ApproxError::NoStabilitySwitch => "NoStabilitySwitch",
                ApproxError::NeutralDegenerate(_) => "NeutralDegenerate",
                ApproxError::ComplexOmega(_) => "ComplexOmega",
                ApproxError::NegativeOmegaSquared(_) => "NegativeOmegaSquared",
                ApproxError::ArccosDomain(_) => "ArccosDomain",
                ApproxError::Model(_) => unreachable!(),
            },
            Error::Integrate(e) => match e {
                IntegrateError::StepTooLarge { .. } => "StepTooLarge",
                IntegrateError::InvalidHorizon(_) => "InvalidHorizon",
                IntegrateError::InvalidStep(_) => "InvalidStep",
                IntegrateError::NonFiniteState(_) => "NonFiniteState",
                IntegrateError::Model(_) => unreachable!(),
            },
            Error::Spectral(e) => match e {
                SpectralError::NoConvergence { .. } => "NoConvergence",
                SpectralError::BranchAtZero(_) => "BranchAtZero",
                SpectralError::SearchExhausted(_) => "SearchExhausted",
                SpectralError::ResidualTooLarge(_) => "ResidualTooLarge",
                SpectralError::Model(_) => unreachable!(),
            },
            Error::Sweep(e) => match e {
                SweepError::InvalidGrid(_) => "InvalidGrid",
                SweepError::GridMismatch => "GridMismatch",
                SweepError::DimensionMismatch { .. } => "DimensionMismatch",
                SweepError::Model(_) => unreachable!(),
            },
        }
    }

    /// True for invalid user input as opposed to a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Model(_)
                | Error::Approx(ApproxError::Model(_))
                | Error::Integrate(IntegrateError::Model(_))
                | Error::Integrate(IntegrateError::StepTooLarge { .. })
                | Error::Integrate(IntegrateError::InvalidHorizon(_))
                | Error::Integrate(IntegrateError::InvalidStep(_))
                | Error::Spectral(SpectralError::Model(_))
                | Error::Sweep(SweepError::Model(_))
                | Error::Sweep(SweepError::InvalidGrid(_))
                | Error::Sweep(SweepError::DimensionMismatch { .. })
        )
    }
}

fn model_kind(e: &ModelError) -> &'static str {
    match e {
        ModelError::Empty => "Empty",
        ModelError::LengthMismatch { .. } => "LengthMismatch",
        ModelError::NonPositiveDelay(_) => "NonPositiveDelay",
        ModelError::InvalidProbability(_) => "InvalidProbability",
        ModelError::ProbSumMismatch(_) => "ProbSumMismatch",
        ModelError::RuleArityMismatch { .. } => "RuleArityMismatch",
        ModelError::InvalidFixedDelay(_) => "InvalidFixedDelay",
        ModelError::InvalidInterval { .. } => "InvalidInterval",
        ModelError::EmptyDiscretization => "EmptyDiscretization",
        ModelError::InvalidParameter { .. } => "InvalidParameter",
        ModelError::TooFewQueues(_) => "TooFewQueues",
        ModelError::HistoryLength { .. } => "HistoryLength",
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
