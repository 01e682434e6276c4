use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability vector is empty")]
    Empty,
    #[error("weight {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1")]
    SumNotOne { sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("loss entry ({row}, {col}) is not finite")]
    NonFiniteLoss { row: usize, col: usize },
    #[error("confidence level {0} is out of range")]
    AlphaOutOfRange(f64),
    #[error("invalid spectral function: {0}")]
    InvalidSpectrum(String),
    #[error("coupling violates its marginals by {residual:e}")]
    InvalidCoupling { residual: f64 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex failed: {reason} (primal residual {primal_residual:e}, dual residual {dual_residual:e})")]
    NumericalFailure {
        reason: String,
        primal_residual: f64,
        dual_residual: f64,
    },
    #[error("problem too large: {0}")]
    ProblemTooLarge(String),
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("certificate invalid: {}", .0.join("; "))]
    CertificateInvalid(Vec<String>),
    #[error("direction is not tangent to the simplex: {0}")]
    DirectionNotTangent(String),
    #[error("need at least {needed} samples, got {given}")]
    TooFewSamples { given: usize, needed: usize },
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid Hoelder data: {0}")]
    InvalidHolderData(String),
    #[error("oracle disagreement: {0}")]
    OracleMismatch(String),
}
