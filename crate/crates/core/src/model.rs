//! Physical parameters, flow-regime classification, characteristic speeds of
//! the hyperbolic part, and the critical weight exponent for algebraic decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bisect;

/// Default relative tolerance for detecting the marginal (degenerate) case of
/// the far-field velocity condition. Exact equality is not representable for
/// general floating-point inputs, so equality is declared within this band.
pub const BOHM_EQUALITY_REL_TOL: f64 = 1e-12;

/// Upper end of the bracket containing every critical weight exponent.
pub const LAMBDA0_BRACKET_HI: f64 = 5.5694;

/// Dimensionless physical constants of the ion flow. The far-field density is
/// fixed at 1 so the far field is quasi-neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaParams {
    /// Ion mass, > 0.
    pub m: f64,
    /// Adiabatic index, > 1.
    pub gamma: f64,
    /// Gas constant, > 0.
    pub r: f64,
    /// Far-field temperature, > 0.
    pub t_inf: f64,
    /// Far-field velocity, < 0 (toward the wall).
    pub u_inf: f64,
    /// Boundary potential at the wall.
    pub phi_b: f64,
}

impl PlasmaParams {
    pub fn new(m: f64, gamma: f64, r: f64, t_inf: f64, u_inf: f64, phi_b: f64) -> Result<Self> {
        let p = PlasmaParams {
            m,
            gamma,
            r,
            t_inf,
            u_inf,
            phi_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        Error::require(self.m > 0.0 && self.m.is_finite(), "m must be > 0")?;
        Error::require(self.gamma > 1.0 && self.gamma.is_finite(), "gamma must be > 1")?;
        Error::require(self.r > 0.0 && self.r.is_finite(), "R must be > 0")?;
        Error::require(self.t_inf > 0.0 && self.t_inf.is_finite(), "T_inf must be > 0")?;
        Error::require(self.u_inf < 0.0 && self.u_inf.is_finite(), "u_inf must be < 0")?;
        Error::require(self.phi_b.is_finite(), "phi_b must be finite")?;
        Ok(())
    }

    /// Far-field density (fixed).
    pub const fn n_inf(&self) -> f64 {
        1.0
    }

    /// γ·R·T_inf, the far-field squared sound speed scaled by mass.
    pub fn gamma_r_t(&self) -> f64 {
        self.gamma * self.r * self.t_inf
    }
}

/// The four mutually exclusive cases of the far-field velocity, partitioning
/// { u_inf < 0 } for fixed remaining parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// u_inf² <= γRT_inf / m: subsonic inflow, monotone solution exists.
    SubsonicExistence,
    /// γRT_inf/m < u_inf² < (γRT_inf+1)/m: no nontrivial stationary solution.
    NoSolutionBand,
    /// u_inf² = (γRT_inf+1)/m: marginal velocity condition, algebraic decay.
    DegenerateBohm,
    /// u_inf² > (γRT_inf+1)/m: strict velocity condition, exponential decay.
    NondegenerateBohm,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::SubsonicExistence => "SubsonicExistence",
            Regime::NoSolutionBand => "NoSolutionBand",
            Regime::DegenerateBohm => "DegenerateBohm",
            Regime::NondegenerateBohm => "NondegenerateBohm",
        }
    }
}

/// Classify the regime with the default equality tolerance.
pub fn classify_regime(params: &PlasmaParams) -> Regime {
    classify_regime_with_tol(params, BOHM_EQUALITY_REL_TOL)
}

/// Classify the regime, declaring the degenerate case when u_inf² matches
/// (γRT_inf+1)/m within relative tolerance `rel_tol`.
pub fn classify_regime_with_tol(params: &PlasmaParams, rel_tol: f64) -> Regime {
    let u2 = params.u_inf * params.u_inf;
    let subsonic_cap = params.gamma_r_t() / params.m;
    let bohm = (params.gamma_r_t() + 1.0) / params.m;
    if (u2 - bohm).abs() <= rel_tol * u2.max(bohm) {
        Regime::DegenerateBohm
    } else if u2 > bohm {
        Regime::NondegenerateBohm
    } else if u2 <= subsonic_cap {
        Regime::SubsonicExistence
    } else {
        Regime::NoSolutionBand
    }
}

/// Wave speeds of the hyperbolic subsystem at a point, in the wall-normal
/// direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicSpeeds {
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
    /// Repeated speed m·u1 carried by the transverse velocity components.
    pub lam_extra: f64,
}

impl CharacteristicSpeeds {
    /// True when every member of the family is strictly negative.
    pub fn all_negative(&self) -> bool {
        self.lam3 < 0.0 && self.lam_extra < 0.0
    }

    /// Largest wave speed magnitude in the family.
    pub fn max_abs(&self) -> f64 {
        self.lam1
            .abs()
            .max(self.lam2.abs())
            .max(self.lam3.abs())
            .max(self.lam_extra.abs())
    }
}

/// Characteristic speeds at local velocity `u1` and temperature `t`.
pub fn char_speeds(u1: f64, t: f64, params: &PlasmaParams) -> Result<CharacteristicSpeeds> {
    Error::require(t > 0.0, format!("char_speeds: temperature {t} must be > 0"))?;
    let m = params.m;
    let grt = params.gamma * params.r * t;
    let rad = ((m - 1.0) * (m - 1.0) * u1 * u1 + 4.0 * grt).sqrt();
    Ok(CharacteristicSpeeds {
        lam1: 0.5 * ((m + 1.0) * u1 - rad),
        lam2: u1,
        lam3: 0.5 * ((m + 1.0) * u1 + rad),
        lam_extra: m * u1,
    })
}

/// Unique root in (4, 5.5694) of the cubic fixing the critical weight exponent
/// for a given adiabatic index, by bisection to absolute tolerance 1e-10.
pub fn solve_lambda0(gamma: f64) -> Result<f64> {
    Error::require(gamma > 1.0 && gamma.is_finite(), "lambda0: gamma must be > 1")?;
    let h = |l: f64| l * (l - 1.0) * (l - 2.0) - 12.0 * (2.0 / (1.0 + gamma) * l + 2.0);
    bisect(&h, 4.0 + 1e-9, LAMBDA0_BRACKET_HI, 1e-10)
}

/// Root of the limiting cubic, the supremum of the critical exponents over
/// all admissible adiabatic indices (≈ 5.5693).
pub fn solve_lambda0_limit() -> Result<f64> {
    let h = |l: f64| l * (l - 1.0) * (l - 2.0) - 12.0 * (l + 2.0);
    bisect(&h, 4.0 + 1e-9, LAMBDA0_BRACKET_HI, 1e-10)
}

/// Slope Γ of the affine map governing the algebraic tail in the marginal
/// regime. Defined for any valid parameters.
pub fn algebraic_decay_slope(params: &PlasmaParams) -> f64 {
    let g = params.gamma;
    (((g * g + g) * params.r * params.t_inf + 2.0) / 12.0).sqrt()
}

/// Asymptotic constants of the marginal (degenerate) profile tail: the
/// affine map G(x) = slope·x + offset and the derivative constants c0..c3
/// of the leading power-law model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateConstants {
    /// Γ, the slope of G.
    pub slope: f64,
    /// G(0) = phi_b^{-1/2}.
    pub offset: f64,
    /// c0..c3; c_i is minus the i-th derivative of -G^{-2} scaled by G^{i+2}.
    pub c: [f64; 4],
}

impl DegenerateConstants {
    pub fn g(&self, x1: f64) -> f64 {
        self.slope * x1 + self.offset
    }
}

/// Build the degenerate asymptotic constants. Requires phi_b > 0 because the
/// offset is phi_b^{-1/2}.
pub fn degenerate_constants(params: &PlasmaParams) -> Result<DegenerateConstants> {
    Error::require(
        params.phi_b > 0.0,
        "degenerate_constants: phi_b must be > 0",
    )?;
    let g = params.gamma;
    let slope = algebraic_decay_slope(params);
    let c2 = ((g * g + g) * params.r * params.t_inf + 2.0) / 2.0;
    let c3 = -2.0 * slope * ((g * g + g) * params.r * params.t_inf + 2.0);
    Ok(DegenerateConstants {
        slope,
        offset: params.phi_b.powf(-0.5),
        c: [1.0, -2.0 * slope, c2, c3],
    })
}
