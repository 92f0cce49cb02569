use crate::urn_model::ModelKind;

/// Errors produced by the urn computation engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UrnError {
    /// The initial ball count is too small to draw a full sample.
    #[error("degenerate urn: initial total {total} is smaller than the sample size m={m}")]
    DegenerateUrn { total: u64, m: u32 },

    /// Initial counts must all be strictly positive.
    #[error("non-positive initial count at color index {index}")]
    NonPositiveCount { index: usize },

    /// A scalar parameter violates its range constraint.
    #[error("bad parameter: {0}")]
    BadParameter(String),

    /// Non-balanced parameters supplied for a balanced model, or missing for NB.
    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    /// A state (ball count) lies outside the urn's feasible range.
    #[error("state out of range: {0}")]
    OutOfRangeState(String),

    /// The requested operation is not defined for this model variant.
    #[error("model {model} is not supported by {operation}")]
    UnsupportedModel {
        model: ModelKind,
        operation: &'static str,
    },

    /// A recurrence step needed a moment that the supplied table does not hold.
    #[error("missing moment entry (n={n}, s={s})")]
    MissingMoment { n: usize, s: usize },

    /// The factorial-moment recurrence only exists for unit increments.
    #[error("factorial-moment recurrence requires c=1, got c={0}")]
    RequiresCEquals1(u32),

    /// Covariance needs two distinct color indices.
    #[error("covariance requires two distinct colors, got index {0} twice")]
    SameColor(usize),

    /// The exact distribution would exceed the configured state cap.
    #[error("state space too large: projected {projected} states exceeds cap {cap}")]
    StateSpaceTooLarge { projected: u64, cap: u64 },

    /// Polynomial root extraction did not reach the requested residual.
    #[error("root finding failed: residual {residual:.3e} above tolerance {tolerance:.3e}")]
    RootFindingFailed { residual: f64, tolerance: f64 },

    /// The limit series did not reach the requested tail bound.
    #[error("series did not converge within {max_terms} terms (tail bound {tail_bound:.3e})")]
    NoConvergence { max_terms: usize, tail_bound: f64 },

    /// A Gamma product that must be real retained a non-negligible imaginary part.
    #[error("gamma product not real: |Im|/|value| = {imaginary_ratio:.3e}")]
    NonRealResult { imaginary_ratio: f64 },
}

pub type Result<T> = std::result::Result<T, UrnError>;
