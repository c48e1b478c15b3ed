use thiserror::Error;

/// How a failure should be reported to a caller that only sees an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureClass {
    /// A mathematically meaningful negative (no covering, no shadow).
    Certification,
    /// Depth, tolerance or precision exhausted.
    Numeric,
    /// Malformed or out-of-range input.
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("resource limit: {what} needs {needed}, budget is {budget}")]
    ResourceLimit { what: &'static str, needed: u128, budget: u128 },
    #[error("map has no inverse evaluator")]
    NotInvertible,
    #[error("map does not send the space into itself: {0}")]
    NotEndomorphism(String),
    #[error("{count} uncertain edges in strict mode")]
    UncertainEdges { count: usize },
    #[error("no path from cube {from} to cube {to} within {max_len} steps")]
    NoPath { from: usize, to: usize, max_len: usize },
    #[error("chain link {index} does not match: target of one certificate is not the source of the next")]
    MismatchedChain { index: usize },
    #[error("pseudo-orbit delta {delta:e} is not below the transition bound {bound:e}")]
    DeltaTooLarge { delta: f64, bound: f64 },
    #[error("itinerary step {step} uses transition {from} -> {to}, which is certified empty")]
    BrokenChain { step: usize, from: usize, to: usize },
    #[error("no surviving cell (deepest surviving depth {depth})")]
    NoSurvivingCell { depth: usize },
    #[error("fixed point residual {residual:e} above tolerance {tol:e}")]
    FixedPointTolUnreached { residual: f64, tol: f64 },
    #[error("matrix is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("certification failed: {0}")]
    NotCertified(String),
}

impl Error {
    pub fn class(&self) -> FailureClass {
        match self {
            Error::NotCertified(_) | Error::NoPath { .. } | Error::NotHyperbolic(_) => FailureClass::Certification,
            Error::NoSurvivingCell { .. }
            | Error::FixedPointTolUnreached { .. }
            | Error::UncertainEdges { .. }
            | Error::ResourceLimit { .. } => FailureClass::Numeric,
            Error::InvalidInput(_)
            | Error::InvalidMap(_)
            | Error::NotInvertible
            | Error::NotEndomorphism(_)
            | Error::MismatchedChain { .. }
            | Error::DeltaTooLarge { .. }
            | Error::BrokenChain { .. } => FailureClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
