//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the sheath toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter or argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `f⁻¹` was asked for a potential below the branch minimum `f(c_inf)`:
    /// there is no density on the equilibrium branch.
    #[error("potential {phi} below branch minimum f(c_inf) = {f_min}; no density on the equilibrium branch")]
    BranchExhausted { phi: f64, f_min: f64 },

    /// Profile construction refused because the existence verdict is negative.
    #[error("no monotone sheath exists for these parameters (regime {regime}, V(phi_b) = {cond_v}, phi_b - f(c_inf) = {cond_f})")]
    RefusedNoSheath {
        regime: &'static str,
        cond_v: f64,
        cond_f: f64,
    },

    /// The Sagdeev potential went negative along an accepted trajectory.
    #[error("numerical branch failure: V({phi}) = {v} < 0 during profile integration")]
    NumericalBranchFailure { phi: f64, v: f64 },

    /// A fit window contained too few usable points.
    #[error("fit window too short: {got} usable points, need {need}")]
    WindowTooShort { got: usize, need: usize },

    /// Fewer than the minimum number of samples for a least-squares fit.
    #[error("fit underdetermined: {got} positive samples in window, need {need}")]
    FitUnderdetermined { got: usize, need: usize },

    /// Newton iteration on the potential equation stagnated.
    #[error("Poisson solve did not converge after {iterations} iterations (residual {residual})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A hyperbolic characteristic turned non-negative where the scheme needs
    /// pure outflow. This is a breakdown of the well-posedness structure, not
    /// a bug in the stepper.
    #[error("characteristic sign violation at x1 = {x1}: max wave speed {speed} >= 0 at t = {t}")]
    CharacteristicViolation { x1: f64, speed: f64, t: f64 },

    /// A field stopped being finite during time stepping.
    #[error("non-finite value in field `{field}` at node {node} (t = {t})")]
    NonFinite {
        field: &'static str,
        node: usize,
        t: f64,
    },

    /// Reconstructed primitives lost positivity.
    #[error("positivity lost: {what} = {value} at node {node}")]
    PositivityLost {
        what: &'static str,
        value: f64,
        node: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Helper used throughout: reject a condition with a message.
    pub fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::invalid(msg))
        }
    }
}
