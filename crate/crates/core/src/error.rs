use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: u32, right: u32 },

    #[error("expansion points differ (max deviation {deviation:.3e})")]
    BaseMismatch { deviation: f64 },

    #[error("non-finite coefficient {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("exponent of total degree {degree} exceeds jet order {order}")]
    DegreeExceedsOrder { degree: u32, order: u32 },

    #[error("singular linear part in {context}")]
    Singular { context: &'static str },

    #[error(
        "frame matrix is singular at {point:?} (|det| = {det:.3e}, threshold {threshold:.3e})"
    )]
    SingularFrame {
        point: Vec<f64>,
        det: f64,
        threshold: f64,
    },

    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error(
        "map does not preserve the hyperplane bundle (residual {residual:.3e} > {tolerance:.3e})"
    )]
    NotHeisenberg { residual: f64, tolerance: f64 },

    #[error("matrix is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("matrix is not antisymmetric (max deviation {deviation:.3e})")]
    NotAntisymmetric { deviation: f64 },

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("elements are not composable: {reason}")]
    NotComposable { reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rate fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}
