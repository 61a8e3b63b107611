use std::collections::BTreeSet;

use thiserror::Error;

use crate::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("arity {0} is below 2")]
    ArityTooSmall(usize),

    #[error("zeta({arity}) = {bound} is below the arity")]
    ZetaBelowArity { arity: usize, bound: usize },

    #[error("zeta({arity}) = {bound} given for an arity outside the eta support")]
    ZetaOnDeadArity { arity: usize, bound: usize },

    #[error("point {0} is not in the structure")]
    UnknownPoint(Point),

    #[error("structures are over different profiles")]
    ProfileMismatch,

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("induced structures on the base {0:?} differ")]
    BaseMismatch(BTreeSet<Point>),

    #[error("saturation insufficient: {0}")]
    SaturationInsufficient(String),

    #[error("factorization step {step} failed: {reason}")]
    StepFailed { step: usize, reason: String },

    #[error("no pointwise stabilizer of a subset of the given set lies in H")]
    NotAboveStabilizer,

    #[error("incomparable minimal supports {0:?} and {1:?}")]
    LatticeViolation(BTreeSet<Point>, BTreeSet<Point>),

    #[error("no extension found within {0} points")]
    NotFoundWithinBudget(usize),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Errors that mean "undecided at this size" rather than "false".
    pub fn is_insufficiency(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_)
                | Error::SaturationInsufficient(_)
                | Error::StepFailed { .. }
                | Error::NotFoundWithinBudget(_)
        )
    }
}
