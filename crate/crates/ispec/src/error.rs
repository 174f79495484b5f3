use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coupling {value} at {grid}[{i}][{j}] is not strictly positive")]
    NonPositiveCoupling {
        grid: &'static str,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed model document: {0}")]
    MalformedDocument(String),
    #[error("weight {0} outside the open interval (0, 1)")]
    WeightOutOfRange(f64),
    #[error("face parity system has no solution: {0}")]
    NonOrientable(String),
    #[error("gadget at site ({x}, {y}) cannot complete terminal set {mask:#06b}")]
    BijectionFailure { x: usize, y: usize, mask: u8 },
    #[error("matrix is not skew-symmetric (residual {0:e})")]
    NotSkew(f64),
    #[error("pfaffian of odd dimension {0} is zero")]
    OddDimension(usize),
    #[error("matrix is numerically singular (relative pivot {0:e})")]
    NearSingular(f64),
    #[error("no sign change of Pf K(1,1) below beta = {0}")]
    NoSignChange(f64),
    #[error("no node of the spectral curve at a torus corner (min |P| = {0:e})")]
    NodeNotFound(f64),
    #[error("duality violated at corner ({theta}, {tau}): |pf| = {primal:e} vs dual {dual:e}")]
    DualityViolation {
        theta: usize,
        tau: usize,
        primal: f64,
        dual: f64,
    },
    #[error("series point N = {0} is not above the limit")]
    NonPositiveResidual(usize),
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("iteration did not converge: {0}")]
    NotConverged(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable identifier, used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonPositiveCoupling { .. } => "non_positive_coupling",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::MalformedDocument(_) => "malformed_document",
            Error::WeightOutOfRange(_) => "weight_out_of_range",
            Error::NonOrientable(_) => "non_orientable",
            Error::BijectionFailure { .. } => "bijection_failure",
            Error::NotSkew(_) => "not_skew",
            Error::OddDimension(_) => "odd_dimension",
            Error::NearSingular(_) => "near_singular",
            Error::NoSignChange(_) => "no_sign_change",
            Error::NodeNotFound(_) => "node_not_found",
            Error::DualityViolation { .. } => "duality_violation",
            Error::NonPositiveResidual(_) => "non_positive_residual",
            Error::TooLarge(_) => "too_large",
            Error::NotConverged(_) => "not_converged",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
