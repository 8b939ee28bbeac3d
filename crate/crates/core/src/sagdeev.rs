//! Scalar functions governing the stationary sheath: the Bernoulli-type map
//! `f` linking density to potential, its inverse on the equilibrium branch,
//! the Sagdeev potential `V`, and the existence verdict for a monotone sheath.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify_regime, PlasmaParams, Regime};
use crate::numerics::{integrate_adaptive, newton_bracketed};

/// Absolute quadrature tolerance for the Sagdeev potential.
pub const V_QUAD_ABS_TOL: f64 = 1e-12;

/// Relative tolerance of the density inversion.
pub const F_INVERSE_REL_TOL: f64 = 1e-13;

/// Below this |phi| the Taylor expansion of `V` about 0 is used internally;
/// the direct integrand suffers cancellation there while the truncated series
/// is accurate to ~1e-12 relative.
pub const V_SERIES_THRESHOLD: f64 = 1e-3;

/// Tolerance slack before a potential is declared off the branch.
const BRANCH_GUARD: f64 = 1e-14;

/// Immutable context caching everything needed to evaluate `f`, `f⁻¹`, and
/// `V` for one parameter set.
#[derive(Debug, Clone)]
pub struct SagdeevContext {
    pub params: PlasmaParams,
    pub regime: Regime,
    /// Critical density: the single critical point of `f`.
    pub c_inf: f64,
    /// Branch minimum `f(c_inf)` (always <= 0).
    pub f_at_c_inf: f64,
    /// f'(1), negative on the supersonic side.
    f1: f64,
    /// Taylor coefficients of V about 0: V ≈ a[0]·φ² + a[1]·φ³ + a[2]·φ⁴ + a[3]·φ⁵.
    a: [f64; 4],
}

impl SagdeevContext {
    pub fn new(params: &PlasmaParams) -> Result<Self> {
        params.validate()?;
        let grt = params.gamma_r_t();
        let mu2 = params.m * params.u_inf * params.u_inf;
        let c_inf = (mu2 / grt).powf(1.0 / (params.gamma + 1.0));

        // derivatives of f at n = 1, in closed form
        let g = params.gamma;
        let f1 = grt - mu2;
        let f2 = grt * (g - 2.0) + 3.0 * mu2;
        let f3 = grt * (g - 2.0) * (g - 3.0) - 12.0 * mu2;
        let f4 = grt * (g - 2.0) * (g - 3.0) * (g - 4.0) + 60.0 * mu2;
        // derivatives of the inverse map at 0 (Lagrange inversion)
        let n1 = 1.0 / f1;
        let n2 = -f2 / f1.powi(3);
        let n3 = (3.0 * f2 * f2 - f1 * f3) / f1.powi(5);
        let n4 = (-15.0 * f2.powi(3) + 10.0 * f1 * f2 * f3 - f1 * f1 * f4) / f1.powi(7);
        let a = [
            (n1 + 1.0) / 2.0,
            (n2 - 1.0) / 6.0,
            (n3 + 1.0) / 24.0,
            (n4 - 1.0) / 120.0,
        ];

        let mut ctx = SagdeevContext {
            params: *params,
            regime: classify_regime(params),
            c_inf,
            f_at_c_inf: 0.0,
            f1,
            a,
        };
        ctx.f_at_c_inf = ctx.f(c_inf)?;
        Ok(ctx)
    }

    /// The potential reached by the stationary flow at density `n`.
    pub fn f(&self, n: f64) -> Result<f64> {
        Error::require(n > 0.0, format!("f: density {n} must be > 0"))?;
        let p = &self.params;
        let g = p.gamma;
        Ok(p.gamma_r_t() / (g - 1.0) * (n.powf(g - 1.0) - 1.0)
            + 0.5 * p.m * p.u_inf * p.u_inf * (1.0 / (n * n) - 1.0))
    }

    /// df/dn.
    pub fn f_prime(&self, n: f64) -> f64 {
        let p = &self.params;
        p.gamma_r_t() * n.powf(p.gamma - 2.0) - p.m * p.u_inf * p.u_inf / (n * n * n)
    }

    /// Invert `f` on the branch containing the far-field state (n, phi) = (1, 0).
    ///
    /// On the supersonic side (c_inf >= 1) the branch is (0, c_inf] where `f`
    /// decreases; on the subsonic side it is [c_inf, ∞) where `f` increases.
    /// Potentials below the branch minimum are rejected.
    pub fn f_inverse(&self, phi: f64) -> Result<f64> {
        Error::require(phi.is_finite(), "f_inverse: phi must be finite")?;
        if phi < self.f_at_c_inf - BRANCH_GUARD {
            return Err(Error::BranchExhausted {
                phi,
                f_min: self.f_at_c_inf,
            });
        }
        if phi <= self.f_at_c_inf {
            return Ok(self.c_inf);
        }
        if phi == 0.0 {
            return Ok(1.0);
        }
        let f_err = |n: f64| self.f(n).expect("bracket stays positive") - phi;
        let df = |n: f64| self.f_prime(n);
        let (lo, hi) = if self.c_inf >= 1.0 {
            // f decreasing on (0, c_inf]
            if phi > 0.0 {
                let mut lo = 0.5;
                while f_err(lo) < 0.0 {
                    lo *= 0.5;
                    if lo < 1e-12 {
                        return Err(Error::InvalidInput(format!(
                            "f_inverse: no bracket for phi = {phi}"
                        )));
                    }
                }
                (lo, 1.0)
            } else {
                (1.0, self.c_inf)
            }
        } else {
            // f increasing on [c_inf, ∞)
            if phi > 0.0 {
                let mut hi = 2.0;
                while f_err(hi) < 0.0 {
                    hi *= 2.0;
                    if hi > 1e12 {
                        return Err(Error::InvalidInput(format!(
                            "f_inverse: no bracket for phi = {phi}"
                        )));
                    }
                }
                (1.0, hi)
            } else {
                (self.c_inf, 1.0)
            }
        };
        let guess = (1.0 + phi / self.f1).clamp(lo, hi);
        let mut n = newton_bracketed(&f_err, &df, lo, hi, guess, F_INVERSE_REL_TOL)?;
        // polish the residual itself: the step criterion above can leave an
        // absolute defect ~|f'|·rel_tol·n where |f'| is large near n -> 0
        for _ in 0..3 {
            let r = f_err(n);
            if r.abs() <= 2e-12 {
                break;
            }
            let d = df(n);
            if d == 0.0 {
                break;
            }
            n -= r / d;
        }
        Ok(n)
    }

    /// Sagdeev potential by adaptive quadrature of f⁻¹(η) − e^{−η} from 0 to
    /// `phi`. V(0) = 0 exactly.
    pub fn v(&self, phi: f64) -> Result<f64> {
        if phi == 0.0 {
            return Ok(0.0);
        }
        // the whole segment must lie in the branch domain
        let lo_end = phi.min(0.0);
        if lo_end < self.f_at_c_inf - BRANCH_GUARD {
            return Err(Error::BranchExhausted {
                phi: lo_end,
                f_min: self.f_at_c_inf,
            });
        }
        let integrand =
            |eta: f64| self.f_inverse(eta).expect("segment inside branch") - (-eta).exp();
        Ok(integrate_adaptive(&integrand, 0.0, phi, V_QUAD_ABS_TOL))
    }

    /// V'(phi) = f⁻¹(phi) − e^{−phi}.
    pub fn v_prime(&self, phi: f64) -> Result<f64> {
        Ok(self.f_inverse(phi)? - (-phi).exp())
    }

    /// V''(phi) = (f⁻¹)'(phi) + e^{−phi}.
    pub fn v_second(&self, phi: f64) -> Result<f64> {
        let n = self.f_inverse(phi)?;
        Ok(1.0 / self.f_prime(n) + (-phi).exp())
    }

    /// Curvature of V at the far-field state: 1 + 1/f'(1). Positive exactly
    /// when the velocity condition is strict, zero when marginal.
    pub fn v_curvature_at_zero(&self) -> f64 {
        2.0 * self.a[0]
    }

    /// Truncated Taylor expansion of V about 0, accurate to relative ~1e-12
    /// for |phi| <= `V_SERIES_THRESHOLD`. No cancellation for tiny phi.
    pub fn v_series(&self, phi: f64) -> f64 {
        let a = &self.a;
        phi * phi * (a[0] + phi * (a[1] + phi * (a[2] + phi * a[3])))
    }

    /// Series form of V'(phi).
    pub fn v_prime_series(&self, phi: f64) -> f64 {
        let a = &self.a;
        phi * (2.0 * a[0] + phi * (3.0 * a[1] + phi * (4.0 * a[2] + phi * 5.0 * a[3])))
    }

    /// Series form of V''(phi).
    pub fn v_second_series(&self, phi: f64) -> f64 {
        let a = &self.a;
        2.0 * a[0] + phi * (6.0 * a[1] + phi * (12.0 * a[2] + phi * 20.0 * a[3]))
    }
}

/// Outcome of the existence test for a monotone stationary sheath.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub exists_monotone: bool,
    /// V(phi_b); NaN when phi_b is off the branch entirely.
    pub cond_v: f64,
    /// phi_b − f(c_inf).
    pub cond_f: f64,
    pub regime: Regime,
}

/// Decide whether a monotone sheath exists for these parameters: the regime
/// must admit solutions and the boundary potential must satisfy both
/// V(phi_b) >= 0 and phi_b >= f(c_inf).
pub fn existence_check(params: &PlasmaParams) -> Result<ExistenceVerdict> {
    let ctx = SagdeevContext::new(params)?;
    existence_check_ctx(&ctx)
}

/// Existence verdict from an already-built context.
pub fn existence_check_ctx(ctx: &SagdeevContext) -> Result<ExistenceVerdict> {
    let phi_b = ctx.params.phi_b;
    let cond_f = phi_b - ctx.f_at_c_inf;
    let cond_v = if cond_f >= -BRANCH_GUARD {
        ctx.v(phi_b)?
    } else {
        f64::NAN
    };
    let regime_admits = ctx.regime != Regime::NoSolutionBand;
    let exists = regime_admits && cond_f >= 0.0 && cond_v >= 0.0;
    Ok(ExistenceVerdict {
        exists_monotone: exists,
        cond_v,
        cond_f,
        regime: ctx.regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PlasmaParams {
        PlasmaParams::new(1.0, 5.0 / 3.0, 1.0, 1.0, -2.0, 0.05).unwrap()
    }

    fn degenerate() -> PlasmaParams {
        PlasmaParams::new(1.0, 5.0 / 3.0, 1.0, 1.0, -(8.0f64 / 3.0).sqrt(), 0.04).unwrap()
    }

    #[test]
    fn f_vanishes_at_equilibrium() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        assert_eq!(ctx.f(1.0).unwrap(), 0.0);
    }

    #[test]
    fn f_at_half_matches_direct_oracle() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        // direct evaluation: 2.5(0.5^{2/3} - 1) + 2(4 - 1)
        let oracle = 2.5 * (0.5f64.powf(2.0 / 3.0) - 1.0) + 2.0 * 3.0;
        let got = ctx.f(0.5).unwrap();
        assert!((got - oracle).abs() < 1e-14);
        assert!((oracle - 5.074_901_312_368_591).abs() < 1e-12);
    }

    #[test]
    fn critical_point_kills_derivative() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        let h = 1e-6;
        let fd = (ctx.f(ctx.c_inf + h).unwrap() - ctx.f(ctx.c_inf - h).unwrap()) / (2.0 * h);
        assert!(fd.abs() < 1e-6, "centered difference at c_inf = {fd}");
        assert!(ctx.c_inf > 1.0); // strict velocity condition
        assert!(ctx.f_at_c_inf <= 0.0);
    }

    #[test]
    fn f_inverse_at_zero_is_one() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        assert_eq!(ctx.f_inverse(0.0).unwrap(), 1.0);
    }

    #[test]
    fn f_inverse_recovers_half() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        let phi = ctx.f(0.5).unwrap();
        let n = ctx.f_inverse(phi).unwrap();
        assert!((n - 0.5).abs() < 1e-12, "n = {n}");
    }

    #[test]
    fn f_inverse_roundtrip_and_monotone_on_branch() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        let lo = ctx.f_at_c_inf;
        let hi = ctx.f(0.01).unwrap();
        let mut prev_n = f64::INFINITY;
        for k in 0..1000 {
            // sweep phi upward across the branch range
            let phi = lo + (hi - lo) * (k as f64 + 0.5) / 1000.0;
            let n = ctx.f_inverse(phi).unwrap();
            let back = ctx.f(n).unwrap();
            assert!(
                (back - phi).abs() < 1e-11,
                "roundtrip err {} at phi {phi}",
                (back - phi).abs()
            );
            assert!(n < prev_n, "f_inverse not strictly decreasing at phi {phi}");
            prev_n = n;
        }
    }

    #[test]
    fn f_inverse_rejects_off_branch() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        match ctx.f_inverse(ctx.f_at_c_inf - 1e-6) {
            Err(Error::BranchExhausted { .. }) => {}
            other => panic!("expected BranchExhausted, got {other:?}"),
        }
    }

    #[test]
    fn v_zero_is_exact() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        assert_eq!(ctx.v(0.0).unwrap(), 0.0);
    }

    #[test]
    fn v_derivative_matches_integrand() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        let h = 1e-5;
        let fd = (ctx.v(0.1 + h).unwrap() - ctx.v(0.1 - h).unwrap()) / (2.0 * h);
        let exact = ctx.f_inverse(0.1).unwrap() - (-0.1f64).exp();
        assert!((fd - exact).abs() < 1e-8, "err {}", (fd - exact).abs());
    }

    #[test]
    fn v_curvature_reference_is_four_sevenths() {
        let ctx = SagdeevContext::new(&reference()).unwrap();
        let expect = 4.0 / 7.0;
        assert!((ctx.v_curvature_at_zero() - expect).abs() < 1e-14);
        // second finite difference of the quadrature V
        let h = 1e-3;
        let fd2 =
            (ctx.v(h).unwrap() - 2.0 * ctx.v(0.0).unwrap() + ctx.v(-h).unwrap()) / (h * h);
        assert!((fd2 - expect).abs() < 1e-5, "fd2 = {fd2}");
    }

    #[test]
    fn v_curvature_vanishes_when_marginal() {
        let ctx = SagdeevContext::new(&degenerate()).unwrap();
        assert!(ctx.v_curvature_at_zero().abs() < 1e-12);
        // h small enough that the h²·V'''' truncation of the symmetric
        // difference sits below the tolerance
        let h = 2e-5;
        let fd2 =
            (ctx.v(h).unwrap() - 2.0 * ctx.v(0.0).unwrap() + ctx.v(-h).unwrap()) / (h * h);
        assert!(fd2.abs() < 1e-8, "fd2 = {fd2}");
    }

    #[test]
    fn v_series_agrees_with_quadrature() {
        for params in [reference(), degenerate()] {
            let ctx = SagdeevContext::new(&params).unwrap();
            for k in 1..=20 {
                let phi = V_SERIES_THRESHOLD * k as f64 / 20.0;
                for p in [phi, -phi] {
                    let q = ctx.v(p).unwrap();
                    let s = ctx.v_series(p);
                    assert!(
                        (q - s).abs() < 2e-12,
                        "phi {p}: quad {q} vs series {s}"
                    );
                }
            }
        }
    }

    #[test]
    fn v_curvature_sign_tracks_regime_on_supersonic_side() {
        use crate::model::Regime::*;
        // sweep u_inf^2 across the supersonic range for several (gamma, R, T)
        for (g, r, t) in [(5.0 / 3.0, 1.0, 1.0), (1.4, 2.0, 0.5), (2.0, 0.7, 1.3)] {
            let grt = g * r * t;
            for k in 0..60 {
                let u2 = grt + 0.02 + (k as f64) * 0.05;
                let p = PlasmaParams::new(1.0, g, r, t, -u2.sqrt(), 0.01).unwrap();
                let ctx = SagdeevContext::new(&p).unwrap();
                let curv = ctx.v_curvature_at_zero();
                match ctx.regime {
                    NondegenerateBohm => assert!(curv > 1e-8),
                    DegenerateBohm => assert!(curv.abs() <= 1e-8),
                    NoSolutionBand => assert!(curv < -1e-8),
                    SubsonicExistence => unreachable!("supersonic sweep"),
                }
            }
        }
    }

    #[test]
    fn existence_reference_cases() {
        // nondegenerate reference with small positive boundary potential
        let v = existence_check(&reference()).unwrap();
        assert!(v.exists_monotone);
        assert!(v.cond_v > 0.0 && v.cond_f > 0.0);
        // frozen quadrature oracle for V(0.05)
        assert!((v.cond_v - 7.114_854_585_359e-4).abs() < 1e-9, "{}", v.cond_v);

        // zero boundary data: constant state exists in any admissible regime
        let mut p = reference();
        p.phi_b = 0.0;
        let v = existence_check(&p).unwrap();
        assert!(v.exists_monotone);
        assert_eq!(v.cond_v, 0.0);

        // the middle band never admits a nontrivial solution
        let mut p = reference();
        p.u_inf = -1.5;
        p.phi_b = 0.05;
        let v = existence_check(&p).unwrap();
        assert!(!v.exists_monotone);
        assert_eq!(v.regime, Regime::NoSolutionBand);
    }

    #[test]
    fn v_nonnegative_along_accepted_nondegenerate_segments() {
        for phi_b in [0.1, 0.05, 0.01, -0.05, -0.1] {
            let mut p = reference();
            p.phi_b = phi_b;
            let ctx = SagdeevContext::new(&p).unwrap();
            let verdict = existence_check_ctx(&ctx).unwrap();
            assert!(verdict.exists_monotone, "phi_b = {phi_b}");
            for k in 1..=50 {
                let phi = phi_b * k as f64 / 50.0;
                let v = ctx.v(phi).unwrap();
                assert!(v >= -1e-13, "V({phi}) = {v} for phi_b = {phi_b}");
            }
        }
    }
}
