use thiserror::Error;

/// Everything that can go wrong while building, solving or analysing a lattice.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("singular parameters: {0}")]
    SingularParameter(String),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix within {max_iter} iterations")]
    Solver { dim: usize, max_iter: usize },

    #[error("eigenbasis is ill-conditioned (condition number {condition:.3e} >= {threshold:.1e}); use the integrator")]
    Conditioning { condition: f64, threshold: f64 },

    #[error("integrator step size underflow at t = {t} (h = {h:.3e})")]
    Stiffness { t: f64, h: f64 },

    #[error("analytic solution is singular at the exceptional point (v/gamma = {v_over_gamma})")]
    AtExceptionalPoint { v_over_gamma: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("horizon too short: distance {distance:.3e} > epsilon at t_max = {t_max} and still decreasing")]
    HorizonTooShort { t_max: f64, distance: f64 },

    #[error("lattice has no dark state: {0}")]
    NoDarkState(String),

    #[error("infeasible recipe: {0}")]
    InfeasibleRecipe(String),
}

pub type Result<T> = std::result::Result<T, Error>;
