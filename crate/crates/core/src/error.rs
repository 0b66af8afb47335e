//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors surfaced by construction, decomposition, quadrature and experiment
/// drivers. Estimation failures are reported, never silently clipped.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// `n` or `k` outside the supported range (both must be >= 1).
    #[error("invalid projective space parameters: n = {n}, k = {k} (need n >= 1, k >= 1)")]
    InvalidDimension { n: i64, k: i64 },

    /// Section space dimension exceeds the configured cap.
    #[error("section space dimension {dim} exceeds the cap {cap}")]
    DimensionCapExceeded { dim: u128, cap: usize },

    /// Shape or size of an input does not match what the operation expects.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Matrix too close to singular for a stable decomposition.
    #[error("matrix is near-singular: condition number estimate {cond:.3e} exceeds {limit:.1e}")]
    NearSingular { cond: f64, limit: f64 },

    /// Determinant is (numerically) zero, so the special-linear rescaling is undefined.
    #[error("matrix determinant is numerically zero (|det| = {abs_det:.3e})")]
    SingularDeterminant { abs_det: f64 },

    /// Input fails a structural invariant (triangularity, positive diagonal, ...).
    #[error("invalid matrix structure: {0}")]
    InvalidStructure(String),

    /// Tangent parameter fails its constraints (upper triangular, real diagonal, trace).
    #[error("invalid tangent parameter: {0}")]
    InvalidTangent(String),

    /// Exact integer coefficients of an induced section matrix overflowed.
    #[error("exact coefficient arithmetic overflowed while expanding a pullback")]
    CoefficientOverflow,

    /// A quadrature-based estimate could not be formed (e.g. non-positive Gram).
    #[error("estimation failure: {0}")]
    EstimationFailure(String),

    /// An experiment configuration is inconsistent or violates an invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Reading or writing an experiment artifact failed.
    #[error("i/o failure: {0}")]
    Io(String),

    /// The requested quadrature method does not apply to this dimension.
    #[error("quadrature method {method} requires n = {required}, got n = {n}")]
    UnsupportedQuadrature {
        method: &'static str,
        required: usize,
        n: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
