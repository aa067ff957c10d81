//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by configuration validation and the solvers.
#[derive(Debug, Clone, Error)]
pub enum PassError {
    /// A configuration field violates its domain constraints.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An input value violates an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A user position coincides with a pinching element; the 1/distance
    /// channel term is singular below this separation.
    #[error("degenerate geometry: user-element distance {distance:.3e} m is below 1e-9 m")]
    DegenerateGeometry { distance: f64 },

    /// Length-to-split conversion requested without a coupling constant.
    #[error("coupling constant kappa is not set in the configuration")]
    MissingCouplingConstant,

    /// Every grid candidate for an element violated the spacing constraint.
    #[error("no feasible grid candidate for element {element}")]
    InfeasibleGrid { element: usize },

    /// An iterative solver exceeded its iteration cap without converging.
    #[error("{solver} did not converge within {iterations} iterations")]
    IterationCap {
        solver: &'static str,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, PassError>;
