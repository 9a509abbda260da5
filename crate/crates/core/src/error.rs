use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density evaluated at a pole")]
    PoleEvaluation,

    #[error("quadrature tolerance not met: error estimate {achieved:e} exceeds target {target:e} after {subdivisions} subdivisions")]
    ToleranceNotMet {
        achieved: f64,
        target: f64,
        subdivisions: usize,
    },

    #[error("{op} supports dimensions 1 and 2, got {dim}")]
    UnsupportedDimension { op: &'static str, dim: usize },

    #[error("argument {value} outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("derivative of order {order} undefined at r = {r}")]
    UndefinedDerivative { order: u8, r: f64 },

    #[error("moment order {0} not supported (expected 1 or 2)")]
    MomentOrder(u8),

    #[error("first-moment regime requested but {0} has no finite first moment on the unit ball")]
    MissingFirstMoment(&'static str),

    #[error("need at least {needed} usable points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("sample of size {got} is below the minimum {needed}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("expected {expected:.3e} proposed jumps exceeds the budget {budget:.3e}; raise the jump cutoff")]
    RateOverflow { expected: f64, budget: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by exhausting a numeric budget rather than by
    /// bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::ToleranceNotMet { .. } | Error::RateOverflow { .. })
    }
}
