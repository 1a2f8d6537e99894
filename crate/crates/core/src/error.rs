use thiserror::Error;

/// Errors shared across the solver stack.
///
/// Solvers never return a silently wrong answer: anything that would void a
/// guarantee (bad input, exhausted guesses, numerical trouble in the LP
/// backend) surfaces as one of these variants.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Input violates a documented precondition (out-of-range index,
    /// nonpositive log argument, malformed file, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Instance is too large for an exact routine (brute force, exact
    /// extension enumeration).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The instance admits no feasible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Every guess in the configured budget failed; either the instance is
    /// infeasible or the guess enumeration was capped too tightly.
    #[error("guesses exhausted: {0}")]
    GuessesExhausted(String),

    /// The LP backend could not certify its own answer.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for CoreError {
    fn from(e: serde_json::Error) -> Self {
        CoreError::Parse(e.to_string())
    }
}
