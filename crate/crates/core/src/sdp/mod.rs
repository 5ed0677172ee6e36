//! Semidefinite feasibility and margin maximization for LMIs affine in a
//! symmetric unknown `P`.

mod problem;
mod solver;

pub use problem::{
    verify_solution, BorderedConstraint, Constraint, Equality, LyapunovConstraint, Objective, SdpProblem,
    DEFAULT_NORM_BOUND,
};
pub use solver::{solve, SdpResult, SdpSettings, SdpStatus, SolverStats};

#[cfg(test)]
mod tests;
