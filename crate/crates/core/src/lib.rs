//! Numerical laboratory for plasma sheaths governed by the full Euler-Poisson
//! system on a half-space.
//!
//! The crate builds the stationary sheath from the Sagdeev potential, classifies
//! solvability through the Bohm criterion, evolves small perturbations of the
//! sheath in time with a coupled hyperbolic/elliptic scheme, and measures decay
//! through weighted Sobolev norms and rate fits.
//!
//! Modules map onto the pipeline:
//!
//! - [`model`] — physical parameters, flow regimes, characteristic speeds,
//!   critical weight exponents.
//! - [`sagdeev`] — the scalar functions `f`, `f⁻¹`, and the Sagdeev potential
//!   `V` that govern the stationary problem, plus the existence verdict.
//! - [`grid`] — truncated half-line grids (uniform or geometrically stretched).
//! - [`stationary`] — construction of the planar sheath profile and verification
//!   of its spatial decay (exponential or algebraic, by regime).
//! - [`poisson`] — damped-Newton solver for the nonlinear potential equation.
//! - [`dynamics`] — upwind/SSP-RK2 evolution of the perturbation system.
//! - [`diagnostics`] — weighted norms, the diagnostic energy, decay-law fits,
//!   and the quadratic-form positivity checker.
//!
//! All floating point work is `f64`. Computations are deterministic: identical
//! inputs produce bit-identical outputs regardless of the `parallel` feature.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod grid;
pub mod model;
pub mod numerics;
pub mod poisson;
pub mod sagdeev;
pub mod stationary;

pub use error::{Error, Result};
