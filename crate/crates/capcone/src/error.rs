//! Error type shared by every module.
//!
//! Errors are split into *input* problems (the caller asked for something
//! outside the mathematical domain) and *numerical* problems (a solver did not
//! converge).  The CLI maps the two classes onto distinct exit codes.

use thiserror::Error;

/// Library-wide error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Gauss parameter `c` is zero or a negative integer.
    #[error("invalid hypergeometric parameters: {0}")]
    InvalidParams(String),
    /// A dimension pair or other argument violates its invariants.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A point lies outside the domain of a closed-form expression.
    #[error("argument outside domain: {0}")]
    OutOfDomain(String),
    /// The ODE right-hand side was requested at t >= 1.
    #[error("singular time t = {0} (t must be < 1)")]
    SingularTime(f64),
    /// A series or iteration exhausted its budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    /// A profile family has no sign change on the open interval.
    #[error("no zero of the profile family in (0, 1)")]
    NoZero,
    /// The supersolution construction found no admissible tau.
    #[error("no root of the tau equation in (t0, 1)")]
    NoTau,
    /// A precondition of a construction is violated (e.g. the stability condition).
    #[error("precondition failed: {0}")]
    ConditionFailed(String),
    /// Adaptive integration failed (step-size underflow, step budget, escape to t = 1).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// A shooting solution does not reach zero with finite slope.
    #[error("trajectory does not reach zero (a = {0})")]
    NotReachingZero(f64),
    /// Terminal-event classification disagrees with the height comparison.
    #[error("ambiguous classification near the Lawson height (a = {0})")]
    AmbiguousNearLawson(f64),
    /// A potential was evaluated on the wrong side of the cone.
    #[error("point lies on the wrong side of the cone")]
    WrongSide,
}

impl Error {
    /// True for errors caused by invalid user input (as opposed to numerics).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::InvalidInput(_)
                | Error::OutOfDomain(_)
                | Error::SingularTime(_)
                | Error::WrongSide
        )
    }
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;
