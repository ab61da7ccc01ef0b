use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation undefined on the zero polynomial")]
    ZeroPolynomial,

    #[error("constant polynomial has no roots")]
    ConstantPolynomial,

    /// Carries the offending coefficients (ascending degree) for diagnostics.
    #[error("polynomial is not real-rooted within tolerance {tol:e}: coefficients {coeffs:?}")]
    NotRealRooted { coeffs: Vec<f64>, tol: f64 },

    #[error("polynomial is not homogeneous (degrees {min}..={max})")]
    NotHomogeneous { min: usize, max: usize },

    #[error("h(e) vanishes at the hyperbolicity direction")]
    DegenerateDirection,

    #[error("hyperbolicity certificate failed along direction {witness:?}")]
    NotHyperbolic { witness: Vec<f64> },

    #[error(
        "vector {index} lies outside the closed hyperbolicity cone (lambda_min = {lambda_min:e})"
    )]
    OutsideCone { index: usize, lambda_min: f64 },

    #[error("rank characterizations disagree: eigenvalue count {by_eigenvalues}, derivative degree {by_derivatives}")]
    RankDisagreement {
        by_eigenvalues: usize,
        by_derivatives: usize,
    },

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("feasible set empty within the search box: {0}")]
    EmptyFeasibleSet(String),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("brute-force search size {size} exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("infeasible instance specification: {0}")]
    Infeasible(String),

    #[error("not a partition: {0}")]
    NotAPartition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures caused by floating-point trouble rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotRealRooted { .. } | Error::RankDisagreement { .. } | Error::Bracket(_)
        )
    }
}
