use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed group description: {0}")]
    MalformedGroup(String),

    #[error("homogeneity violation: {0}")]
    HomogeneityViolation(String),

    #[error("rank deficient: iterated brackets span {rank} of {dim} directions at the origin")]
    RankDeficient { rank: usize, dim: usize },

    #[error("analytic mode requested but field {0:?} has no analytic partials")]
    MissingPartials(String),

    #[error("finite-difference step collapsed in coordinate {coord} at x = {value}")]
    FdStepUnderflow { coord: usize, value: f64 },

    #[error("point {point:?} lies on the singular set |x'| = 0")]
    SingularPoint { point: Vec<f64> },

    #[error("non-finite integrand at quadrature node {point:?}")]
    SingularEvaluation { point: Vec<f64> },

    #[error("hypothesis violated: {0}")]
    ConstraintViolated(String),

    #[error("inadmissible support: {0}")]
    InadmissibleSupport(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FdStepUnderflow { .. } | Error::SingularEvaluation { .. }
        )
    }
}
