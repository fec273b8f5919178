//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by region builders, solvers and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The Aztec cuboid balance identity fails.
    #[error("cuboid constraint violated: (a+1)(b+1)(c+1) = {lhs} but a(b+2)(c+2) = {rhs}")]
    CuboidConstraint { lhs: u64, rhs: u64 },
    /// The region admits no cover, or some edge is never used.
    #[error("infeasible region: {0}")]
    Infeasible(String),
    /// An iterative solver stopped before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    /// A slope is outside the Newton polytope or too close to its boundary.
    #[error("slope outside the Newton polytope interior (boundary distance {distance:.3e})")]
    Domain { distance: f64 },
    /// An exhaustive computation would exceed the configured limits.
    #[error("guard rail exceeded: {0}; use sampling or pass the unsafe override")]
    GuardRail(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::CuboidConstraint { .. } | Error::Domain { .. } => 2,
            Error::Infeasible(_) => 2,
            Error::NoConvergence { .. } => 3,
            Error::GuardRail(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
