use thiserror::Error;

/// Every failure the library can report.
///
/// [`XiError::name`] yields the bare variant name, which the CLI prints on
/// stderr and the FFI layer maps onto status codes.
#[derive(Debug, Error)]
pub enum XiError {
    #[error("negative probability {value} at cell ({x_index}, {y_index})")]
    NegativeProbability {
        x_index: usize,
        y_index: usize,
        value: f64,
    },
    #[error("probabilities sum to {sum}, expected 1")]
    MassNotOne { sum: f64 },
    #[error("Y is almost surely constant")]
    DegenerateY,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("support values must be finite and strictly increasing: {0}")]
    BadSupport(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("bad model parameters: {0}")]
    BadParams(String),
    #[error("need at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("all Y values are equal; xi_n is undefined")]
    AllYEqual,
    #[error("kernel of arity {arity} needs O(n^{arity}) work; n = {n} exceeds the limit {limit}")]
    ArityTooLargeForN { arity: usize, n: usize, limit: usize },
    #[error("kernel arity {0} exceeds the Monte Carlo limit of 4")]
    ArityGuard(usize),
    #[error("support of Y has {size} points, limit is {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("X has no ties; the plug-in conditional law is degenerate (use the bootstrap)")]
    NoXTies,
    #[error("m = {m} must satisfy 2 <= m <= n = {n}")]
    BadM { m: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("theoretical variance is zero; standardization impossible")]
    ZeroSigma,
    #[error("parse error at row {row}, column {column}: {message}")]
    ParseError {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("input has {0} data rows, need at least 2")]
    TooFewRows(usize),
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl XiError {
    pub fn name(&self) -> &'static str {
        match self {
            XiError::NegativeProbability { .. } => "NegativeProbability",
            XiError::MassNotOne { .. } => "MassNotOne",
            XiError::DegenerateY => "DegenerateY",
            XiError::DimensionMismatch(_) => "DimensionMismatch",
            XiError::BadSupport(_) => "BadSupport",
            XiError::NonFinite(_) => "NonFinite",
            XiError::UnknownModel(_) => "UnknownModel",
            XiError::BadParams(_) => "BadParams",
            XiError::TooFewObservations(_) => "TooFewObservations",
            XiError::AllYEqual => "AllYEqual",
            XiError::ArityTooLargeForN { .. } => "ArityTooLargeForN",
            XiError::ArityGuard(_) => "ArityGuard",
            XiError::SupportTooLarge { .. } => "SupportTooLarge",
            XiError::NoXTies => "NoXTies",
            XiError::BadM { .. } => "BadM",
            XiError::InvalidArgument(_) => "InvalidArgument",
            XiError::ZeroSigma => "ZeroSigma",
            XiError::ParseError { .. } => "ParseError",
            XiError::TooFewRows(_) => "TooFewRows",
            XiError::NonFiniteValue { .. } => "NonFiniteValue",
            XiError::Io(_) => "Io",
            XiError::Json(_) => "Json",
        }
    }

    /// True for malformed input (files, flags, model specs) as opposed to
    /// well-formed input on which the computation is undefined.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            XiError::ParseError { .. }
                | XiError::TooFewRows(_)
                | XiError::NonFiniteValue { .. }
                | XiError::Io(_)
                | XiError::Json(_)
                | XiError::UnknownModel(_)
                | XiError::BadParams(_)
                | XiError::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, XiError>;
