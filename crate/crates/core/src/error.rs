use thiserror::Error;

/// Errors raised by certification, composition and simulation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{algorithm} did not converge after {iterations} iterations")]
    NoConvergence { algorithm: &'static str, iterations: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numeric failure in solver: {0}")]
    NumericFailure(String),

    #[error("inertia mismatch: {0}")]
    InertiaMismatch(String),

    #[error("varying C/D vertices require Q ⪯ 0 (max eigenvalue of Q is {max_eig_q:e})")]
    VaryingOutputNotConvex { max_eig_q: f64 },

    #[error("invalid bisection bracket: {0}")]
    BracketInvalid(String),

    #[error("algebraic loop: {0}")]
    AlgebraicLoop(String),

    #[error("composition unsound: {0}")]
    CompositionUnsound(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("nonlinear Jacobian entry `{0}` has no finite bounds")]
    UnboundedEntry(String),

    #[error("trajectory diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no admissible rate found: {0}")]
    NotFound(String),
}

impl Error {
    /// True for outcomes that mean "no certificate exists under these settings"
    /// rather than a malformed request or a numerical breakdown.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::NotFound(_) | Error::BracketInvalid(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
