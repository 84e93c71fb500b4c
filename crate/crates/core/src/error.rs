use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probability {value} outside {range}")]
    ProbabilityOutOfRange { value: f64, range: &'static str },

    #[error("could not bracket the VaR root after {expansions} expansions (last bracket [{lo}, {hi}])")]
    BracketExpansion { expansions: usize, lo: f64, hi: f64 },

    #[error("root search did not converge in {iterations} iterations")]
    RootNotConverged { iterations: usize },

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("infeasible calibration target: {0}")]
    InfeasibleTarget(String),

    #[error("{paths} paths leave {tail:.1} tail points at confidence {confidence}; at least {required} are needed")]
    InsufficientTail {
        paths: usize,
        confidence: f64,
        tail: f64,
        required: f64,
    },

    #[error("covariance matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
}

impl RiskError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        RiskError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
