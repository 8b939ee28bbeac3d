//! Time evolution of small perturbations of the stationary sheath.
//!
//! The hyperbolic fields (φ, ψ, ζ) are advanced in nonconservative form with
//! upwind advection (first order, or second order with a minmod limiter) and
//! centered pressure/potential gradients, coupled to the nonlinear potential
//! solve after every stage of the SSP-RK2 integrator.
//!
//! Boundary structure follows the wave pattern of the flow: every
//! characteristic at the wall points out of the domain, so the wall rows use
//! one-sided interior stencils and no boundary condition; at the truncation
//! boundary the far-field equilibrium flows in, so all perturbations are
//! clamped to zero there. The potential perturbation is pinned to zero at
//! both ends. A characteristic turning non-negative anywhere aborts the run:
//! that is a breakdown of the problem structure, not of the scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::diagnostics::{energy_e0, weighted_norm, WeightSpec};
use crate::error::{Error, Result};
use crate::grid::TransverseAxis;
use crate::model::{char_speeds, PlasmaParams};
use crate::numerics::{d1_centered, d1_left, d1_right, minmod};
use crate::poisson::{poisson_solve, PoissonProblem};
use crate::sagdeev::SagdeevContext;
use crate::stationary::StationaryProfile;

/// Perturbation fields on the (possibly tensor) grid at one time.
#[derive(Debug, Clone)]
pub struct PerturbationState {
    pub t: f64,
    /// Log-density perturbation φ = log n − log ñ.
    pub varphi: Vec<f64>,
    /// Velocity perturbation, one component per space dimension.
    pub psi: Vec<Vec<f64>>,
    /// Temperature perturbation ζ.
    pub zeta: Vec<f64>,
    /// Potential perturbation σ, the potential solve of the current φ.
    pub sigma: Vec<f64>,
}

impl PerturbationState {
    pub fn zero(total: usize, n_dims: usize) -> Self {
        PerturbationState {
            t: 0.0,
            varphi: vec![0.0; total],
            psi: vec![vec![0.0; total]; n_dims],
            zeta: vec![0.0; total],
            sigma: vec![0.0; total],
        }
    }

    /// Stacked hyperbolic fields (φ, ψ₁..ψ_N, ζ) for norm evaluation.
    pub fn theta_fields(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.varphi];
        for p in &self.psi {
            v.push(p);
        }
        v.push(&self.zeta);
        v
    }
}

/// Spatial/temporal discretization knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Courant number in (0, 1].
    pub cfl: f64,
    /// 1 = first-order upwind, 2 = upwind-biased with minmod limiter.
    pub spatial_order: u8,
    /// 1 = forward Euler, 2 = SSP-RK2 (default).
    pub rk_stages: u8,
    pub t_end: f64,
    /// Time interval between recorded rows.
    pub output_cadence: f64,
    /// Residual tolerance for the potential solves.
    pub poisson_tol: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cfl: 0.4,
            spatial_order: 2,
            rk_stages: 2,
            t_end: 10.0,
            output_cadence: 0.1,
            poisson_tol: 1e-11,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        Error::require(self.cfl > 0.0 && self.cfl <= 1.0, "cfl must be in (0, 1]")?;
        Error::require(
            self.spatial_order == 1 || self.spatial_order == 2,
            "spatial_order must be 1 or 2",
        )?;
        Error::require(
            self.rk_stages == 1 || self.rk_stages == 2,
            "rk_stages must be 1 or 2",
        )?;
        Error::require(self.t_end > 0.0, "t_end must be > 0")?;
        Error::require(self.output_cadence > 0.0, "output_cadence must be > 0")?;
        Error::require(self.poisson_tol > 0.0, "poisson_tol must be > 0")
    }
}

/// Time derivatives of the hyperbolic fields.
#[derive(Debug, Clone)]
pub struct FieldRates {
    pub varphi: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub zeta: Vec<f64>,
}

/// Initial data families. Both produce a smooth localized bump modulated by
/// an envelope that keeps the corresponding weighted norms finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialFamily {
    /// Envelope e^{−λ x₁}.
    GaussianExp { lambda: f64 },
    /// Envelope (1 + β x₁)^{−(λ+2)/2}.
    GaussianAlg { lambda: f64, beta: f64 },
}

/// Precomputed stepping context for one profile/scheme pair.
pub struct Stepper<'a> {
    pub profile: &'a StationaryProfile,
    pub params: &'a PlasmaParams,
    pub scheme: SchemeConfig,
    pub transverse: Vec<TransverseAxis>,
    /// d(log ñ)/dx₁, dũ/dx₁, dT̃/dx₁ per wall-normal node.
    dv: Vec<f64>,
    du: Vec<f64>,
    dt_prof: Vec<f64>,
    tlen: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(
        profile: &'a StationaryProfile,
        params: &'a PlasmaParams,
        scheme: SchemeConfig,
        transverse: Vec<TransverseAxis>,
    ) -> Result<Self> {
        scheme.validate()?;
        params.validate()?;
        let ctx = SagdeevContext::new(params)?;
        let n1 = profile.grid.num_nodes();
        let mut dv = vec![0.0; n1];
        let mut du = vec![0.0; n1];
        let mut dt_prof = vec![0.0; n1];
        for j in 0..n1 {
            let n = profile.n_t[j];
            let dn = profile.dphi[j] / ctx.f_prime(n);
            dv[j] = dn / n;
            du[j] = -params.u_inf * dn / (n * n);
            dt_prof[j] = params.t_inf * (params.gamma - 1.0) * n.powf(params.gamma - 2.0) * dn;
        }
        let tlen = transverse.iter().map(|a| a.m).product::<usize>().max(1);
        Ok(Stepper {
            profile,
            params,
            scheme,
            transverse,
            dv,
            du,
            dt_prof,
            tlen,
        })
    }

    pub fn n_dims(&self) -> usize {
        1 + self.transverse.len()
    }

    pub fn total(&self) -> usize {
        self.profile.grid.num_nodes() * self.tlen
    }

    fn stride(&self, axis: usize) -> usize {
        self.transverse[axis + 1..]
            .iter()
            .map(|a| a.m)
            .product::<usize>()
            .max(1)
    }

    /// Limited slope along x₁ at node i1 (zero at the two boundary nodes).
    fn slope_x1(&self, q: &[f64], i1: usize, it: usize) -> f64 {
        let n1 = self.profile.grid.num_nodes();
        if i1 == 0 || i1 + 1 >= n1 {
            return 0.0;
        }
        let t = self.tlen;
        let hm = self.profile.grid.h(i1 - 1);
        let hp = self.profile.grid.h(i1);
        minmod(
            (q[(i1 + 1) * t + it] - q[i1 * t + it]) / hp,
            (q[i1 * t + it] - q[(i1 - 1) * t + it]) / hm,
        )
    }

    /// Upwind x₁ derivative at (i1, it) for transport speed `speed`.
    ///
    /// Second order uses the limited-slope correction only where both
    /// neighbor slopes are genuine; a fabricated boundary slope would corrupt
    /// the correction at leading order, so the wall node takes the one-sided
    /// second-order stencil and the node before the clamped boundary falls
    /// back to first order.
    fn upwind_x1(&self, q: &[f64], i1: usize, it: usize, speed: f64) -> f64 {
        let n1 = self.profile.grid.num_nodes();
        let t = self.tlen;
        let idx = i1 * t + it;
        if speed <= 0.0 {
            if i1 + 1 >= n1 {
                return 0.0;
            }
            let hp = self.profile.grid.h(i1);
            let first = (q[idx + t] - q[idx]) / hp;
            if self.scheme.spatial_order == 1 {
                return first;
            }
            if i1 == 0 {
                return d1_left(
                    q[it],
                    q[t + it],
                    q[2 * t + it],
                    self.profile.grid.h(0),
                    self.profile.grid.h(1),
                );
            }
            if i1 + 2 >= n1 {
                return first;
            }
            first - 0.5 * (self.slope_x1(q, i1 + 1, it) - self.slope_x1(q, i1, it))
        } else {
            if i1 == 0 {
                // inflow-side stencil unavailable; use the interior side
                let hp = self.profile.grid.h(0);
                return (q[idx + t] - q[idx]) / hp;
            }
            let hm = self.profile.grid.h(i1 - 1);
            let first = (q[idx] - q[idx - t]) / hm;
            if self.scheme.spatial_order == 1 {
                return first;
            }
            if i1 + 1 >= n1 {
                return d1_right(
                    q[(n1 - 3) * t + it],
                    q[(n1 - 2) * t + it],
                    q[(n1 - 1) * t + it],
                    self.profile.grid.h(n1 - 3),
                    self.profile.grid.h(n1 - 2),
                );
            }
            if i1 == 1 {
                return first;
            }
            first + 0.5 * (self.slope_x1(q, i1, it) - self.slope_x1(q, i1 - 1, it))
        }
    }

    /// Centered x₁ derivative (one-sided second order at the ends).
    fn centered_x1(&self, q: &[f64], i1: usize, it: usize) -> f64 {
        let n1 = self.profile.grid.num_nodes();
        let t = self.tlen;
        let g = &self.profile.grid;
        if i1 == 0 {
            let (h1, h2) = (g.h(0), g.h(1));
            d1_left(q[it], q[t + it], q[2 * t + it], h1, h2)
        } else if i1 + 1 >= n1 {
            let (h1, h2) = (g.h(n1 - 3), g.h(n1 - 2));
            d1_right(
                q[(n1 - 3) * t + it],
                q[(n1 - 2) * t + it],
                q[(n1 - 1) * t + it],
                h1,
                h2,
            )
        } else {
            let (h1, h2) = (g.h(i1 - 1), g.h(i1));
            d1_centered(
                q[(i1 - 1) * t + it],
                q[i1 * t + it],
                q[(i1 + 1) * t + it],
                h1,
                h2,
            )
        }
    }

    fn trans_neighbors(&self, it: usize, axis: usize) -> (usize, usize) {
        let stride = self.stride(axis);
        let m = self.transverse[axis].m;
        let ia = (it / stride) % m;
        let dn = it + ((ia + m - 1) % m) * stride - ia * stride;
        let up = it + ((ia + 1) % m) * stride - ia * stride;
        (dn, up)
    }

    /// Upwind derivative along a periodic transverse axis.
    fn upwind_trans(&self, q: &[f64], axis: usize, i1: usize, it: usize, speed: f64) -> f64 {
        let t = self.tlen;
        let h = self.transverse[axis].h();
        let (dn, up) = self.trans_neighbors(it, axis);
        let base = i1 * t;
        let slope = |jt: usize| -> f64 {
            let (d, u) = self.trans_neighbors(jt, axis);
            minmod(
                (q[base + u] - q[base + jt]) / h,
                (q[base + jt] - q[base + d]) / h,
            )
        };
        if speed <= 0.0 {
            let first = (q[base + up] - q[base + it]) / h;
            if self.scheme.spatial_order == 1 {
                first
            } else {
                first - 0.5 * (slope(up) - slope(it))
            }
        } else {
            let first = (q[base + it] - q[base + dn]) / h;
            if self.scheme.spatial_order == 1 {
                first
            } else {
                first + 0.5 * (slope(it) - slope(dn))
            }
        }
    }

    /// Centered derivative along a periodic transverse axis.
    fn centered_trans(&self, q: &[f64], axis: usize, i1: usize, it: usize) -> f64 {
        let t = self.tlen;
        let h = self.transverse[axis].h();
        let (dn, up) = self.trans_neighbors(it, axis);
        (q[i1 * t + up] - q[i1 * t + dn]) / (2.0 * h)
    }

    /// Time derivatives of the hyperbolic fields. The potential perturbation
    /// of `state` must be current for its φ.
    pub fn rhs(&self, state: &PerturbationState) -> Result<FieldRates> {
        let n1 = self.profile.grid.num_nodes();
        let t = self.tlen;
        let total = self.total();
        let n_dims = self.n_dims();
        Error::require(
            state.varphi.len() == total && state.psi.len() == n_dims,
            "rhs: state does not match the domain",
        )?;
        let p = self.params;
        let r_over_m = p.r / p.m;
        let inv_m = 1.0 / p.m;

        let mut rates = FieldRates {
            varphi: vec![0.0; total],
            psi: vec![vec![0.0; total]; n_dims],
            zeta: vec![0.0; total],
        };

        for i1 in 0..n1 - 1 {
            for it in 0..t {
                let idx = i1 * t + it;
                let psi1 = state.psi[0][idx];
                let u1 = self.profile.u_t[i1] + psi1;
                let temp = self.profile.t_t[i1] + state.zeta[idx];
                let zeta = state.zeta[idx];

                // advective derivative under the full velocity
                let adv = |q: &[f64]| -> f64 {
                    let mut a = u1 * self.upwind_x1(q, i1, it, u1);
                    for axis in 0..self.transverse.len() {
                        let ua = state.psi[axis + 1][idx];
                        if ua != 0.0 {
                            a += ua * self.upwind_trans(q, axis, i1, it, ua);
                        }
                    }
                    a
                };

                let mut div_psi = self.centered_x1(&state.psi[0], i1, it);
                for axis in 0..self.transverse.len() {
                    div_psi += self.centered_trans(&state.psi[axis + 1], axis, i1, it);
                }

                rates.varphi[idx] = -adv(&state.varphi) - div_psi - psi1 * self.dv[i1];

                let dphi_x1 = self.centered_x1(&state.varphi, i1, it);
                let dzeta_x1 = self.centered_x1(&state.zeta, i1, it);
                let dsigma_x1 = self.centered_x1(&state.sigma, i1, it);
                rates.psi[0][idx] = -adv(&state.psi[0])
                    - r_over_m * temp * dphi_x1
                    - r_over_m * dzeta_x1
                    + inv_m * dsigma_x1
                    - psi1 * self.du[i1]
                    - r_over_m * zeta * self.dv[i1];

                for axis in 0..self.transverse.len() {
                    let dphi_a = self.centered_trans(&state.varphi, axis, i1, it);
                    let dzeta_a = self.centered_trans(&state.zeta, axis, i1, it);
                    let dsigma_a = self.centered_trans(&state.sigma, axis, i1, it);
                    rates.psi[axis + 1][idx] = -adv(&state.psi[axis + 1])
                        - r_over_m * temp * dphi_a
                        - r_over_m * dzeta_a
                        + inv_m * dsigma_a;
                }

                rates.zeta[idx] = -adv(&state.zeta)
                    - (p.gamma - 1.0) * temp * div_psi
                    - psi1 * self.dt_prof[i1]
                    - (p.gamma - 1.0) * zeta * self.du[i1];

                if !rates.varphi[idx].is_finite()
                    || !rates.psi[0][idx].is_finite()
                    || !rates.zeta[idx].is_finite()
                {
                    return Err(Error::NonFinite {
                        field: "rates",
                        node: idx,
                        t: state.t,
                    });
                }
            }
        }
        // clamped inflow boundary: rates stay zero at i1 = n1-1
        Ok(rates)
    }

    /// Wave-speed scan: verifies strict negativity of the whole family at
    /// every node and returns (max speed, admissible CFL time step).
    pub fn speeds_and_dt(&self, state: &PerturbationState) -> Result<(f64, f64)> {
        let n1 = self.profile.grid.num_nodes();
        let t = self.tlen;
        let p = self.params;
        let g = &self.profile.grid;
        let mut max_speed = 0.0f64;
        let mut dt = f64::INFINITY;
        for i1 in 0..n1 {
            let h_loc = if i1 == 0 {
                g.h(0)
            } else if i1 == n1 - 1 {
                g.h(n1 - 2)
            } else {
                g.h(i1 - 1).min(g.h(i1))
            };
            for it in 0..t {
                let idx = i1 * t + it;
                let u1 = self.profile.u_t[i1] + state.psi[0][idx];
                let temp = self.profile.t_t[i1] + state.zeta[idx];
                if temp <= 0.0 {
                    return Err(Error::PositivityLost {
                        what: "temperature",
                        value: temp,
                        node: idx,
                    });
                }
                let cs = char_speeds(u1, temp, p)?;
                if !cs.all_negative() {
                    return Err(Error::CharacteristicViolation {
                        x1: g.x(i1),
                        speed: cs.lam3.max(cs.lam_extra),
                        t: state.t,
                    });
                }
                // stencil speed of the discretized acoustic operator
                let sound = (p.gamma * p.r * temp / p.m).sqrt();
                let local = cs.max_abs().max(u1.abs() + sound);
                max_speed = max_speed.max(local);
                dt = dt.min(h_loc / local);
                for axis in 0..self.transverse.len() {
                    let ua = state.psi[axis + 1][idx].abs() + sound;
                    dt = dt.min(self.transverse[axis].h() / ua);
                }
            }
        }
        Ok((max_speed, self.scheme.cfl * dt))
    }

    fn clamp_far_boundary(&self, state: &mut PerturbationState) {
        let n1 = self.profile.grid.num_nodes();
        let t = self.tlen;
        for it in 0..t {
            let idx = (n1 - 1) * t + it;
            state.varphi[idx] = 0.0;
            for pc in state.psi.iter_mut() {
                pc[idx] = 0.0;
            }
            state.zeta[idx] = 0.0;
        }
    }

    fn solve_sigma(&self, state: &mut PerturbationState, warm: &[f64]) -> Result<()> {
        let problem = PoissonProblem::new(self.profile, &state.varphi)
            .with_transverse(&self.transverse)
            .with_tol(self.scheme.poisson_tol);
        let sol = poisson_solve(&problem, Some(warm))?;
        state.sigma = sol.sigma;
        Ok(())
    }

    fn apply_rates(state: &PerturbationState, rates: &FieldRates, dt: f64) -> PerturbationState {
        let mut out = state.clone();
        for (o, r) in out.varphi.iter_mut().zip(rates.varphi.iter()) {
            *o += dt * r;
        }
        for (oc, rc) in out.psi.iter_mut().zip(rates.psi.iter()) {
            for (o, r) in oc.iter_mut().zip(rc.iter()) {
                *o += dt * r;
            }
        }
        for (o, r) in out.zeta.iter_mut().zip(rates.zeta.iter()) {
            *o += dt * r;
        }
        out
    }

    fn check_state(&self, state: &PerturbationState) -> Result<()> {
        let t = self.tlen;
        for (i1, &tt) in self.profile.t_t.iter().enumerate() {
            for it in 0..t {
                let idx = i1 * t + it;
                let temp = tt + state.zeta[idx];
                if !temp.is_finite() || temp <= 0.0 {
                    return Err(Error::PositivityLost {
                        what: "temperature",
                        value: temp,
                        node: idx,
                    });
                }
                if !state.varphi[idx].is_finite() {
                    return Err(Error::NonFinite {
                        field: "varphi",
                        node: idx,
                        t: state.t,
                    });
                }
            }
        }
        Ok(())
    }

    /// One time step: CFL step size from the current fields, SSP-RK2 stages
    /// with the potential re-solved after each stage, far boundary clamped.
    pub fn step(&self, state: &PerturbationState) -> Result<PerturbationState> {
        let (_, mut dt) = self.speeds_and_dt(state)?;
        let remaining = self.scheme.t_end - state.t;
        if remaining <= 0.0 {
            return Ok(state.clone());
        }
        if dt >= remaining {
            dt = remaining;
        }

        let k1 = self.rhs(state)?;
        let mut stage1 = Self::apply_rates(state, &k1, dt);
        stage1.t = state.t + dt;
        self.clamp_far_boundary(&mut stage1);
        self.solve_sigma(&mut stage1, &state.sigma)?;

        let mut next = if self.scheme.rk_stages == 1 {
            stage1
        } else {
            let k2 = self.rhs(&stage1)?;
            let corrected = Self::apply_rates(&stage1, &k2, dt);
            let mut avg = state.clone();
            let blend = |a: &mut [f64], b: &[f64]| {
                for (x, y) in a.iter_mut().zip(b.iter()) {
                    *x = 0.5 * *x + 0.5 * y;
                }
            };
            blend(&mut avg.varphi, &corrected.varphi);
            for (ac, cc) in avg.psi.iter_mut().zip(corrected.psi.iter()) {
                blend(ac, cc);
            }
            blend(&mut avg.zeta, &corrected.zeta);
            avg.t = state.t + dt;
            self.clamp_far_boundary(&mut avg);
            self.solve_sigma(&mut avg, &stage1.sigma)?;
            avg
        };
        next.t = state.t + dt;
        self.check_state(&next)?;
        Ok(next)
    }
}

/// Build initial data: a seeded smooth bump with the requested envelope on
/// (φ, ψ₁, ζ), zero transverse velocity, and the matching potential solve.
pub fn make_initial(
    family: InitialFamily,
    amplitude: f64,
    profile: &StationaryProfile,
    params: &PlasmaParams,
    transverse: &[TransverseAxis],
    seed: u64,
    poisson_tol: f64,
) -> Result<PerturbationState> {
    Error::require(amplitude >= 0.0, "amplitude must be >= 0")?;
    params.validate()?;
    let grid = &profile.grid;
    let n1 = grid.num_nodes();
    let tlen = transverse.iter().map(|a| a.m).product::<usize>().max(1);
    let n_dims = 1 + transverse.len();
    let mut state = PerturbationState::zero(n1 * tlen, n_dims);
    if amplitude == 0.0 {
        return Ok(state);
    }

    let l = grid.length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: f64 = l * (0.125 + 0.125 * rng.gen::<f64>());
    let width = l / 16.0;

    let envelope = |x: f64| -> f64 {
        match family {
            InitialFamily::GaussianExp { lambda } => (-lambda * x).exp(),
            InitialFamily::GaussianAlg { lambda, beta } => {
                (1.0 + beta * x).powf(-(lambda + 2.0) / 2.0)
            }
        }
    };

    // transverse modulation so multi-dimensional runs exercise the full
    // divergence
    let modulation: Vec<f64> = (0..tlen)
        .map(|it| {
            let mut m = 1.0;
            let mut rem = it;
            for axis in transverse.iter().rev() {
                let ia = rem % axis.m;
                rem /= axis.m;
                let y = ia as f64 * axis.h();
                m *= 1.0 + 0.3 * (2.0 * std::f64::consts::PI * y / axis.length).cos();
            }
            m
        })
        .collect();

    for i1 in 0..n1 - 1 {
        let x = grid.x(i1);
        let bump = (-((x - center) / width).powi(2)).exp();
        let base = amplitude * envelope(x) * bump;
        for it in 0..tlen {
            let idx = i1 * tlen + it;
            state.varphi[idx] = base * modulation[it];
            state.psi[0][idx] = -0.5 * base * modulation[it];
            state.zeta[idx] = 0.5 * base * modulation[it];
        }
    }

    for i1 in 0..n1 {
        for it in 0..tlen {
            let temp = profile.t_t[i1] + state.zeta[i1 * tlen + it];
            Error::require(
                temp > 0.0,
                format!("amplitude too large: temperature {temp} at node {i1}"),
            )?;
        }
    }

    let problem = PoissonProblem::new(profile, &state.varphi)
        .with_transverse(transverse)
        .with_tol(poisson_tol);
    let sol = poisson_solve(&problem, None)?;
    state.sigma = sol.sigma;
    Ok(state)
}

/// One recorded instant of an evolution.
#[derive(Debug, Clone)]
pub struct TrajectoryRow {
    pub t: f64,
    /// One value per probe, in probe order.
    pub norms: Vec<f64>,
    pub e0: f64,
    pub min_n: f64,
    pub max_n: f64,
    pub min_temp: f64,
    pub max_temp: f64,
    pub max_speed: f64,
    /// Energy density at the wall times the wall-normal velocity there
    /// (transverse mean): instantaneous outflow of diagnostic energy.
    pub wall_energy_flux: f64,
}

/// Recorded evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub probe_ids: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
    pub steps: usize,
}

/// Advance `state0` to the scheme's end time, recording probe norms and
/// scalar diagnostics at the output cadence. Deterministic for a fixed
/// configuration.
pub fn evolve(
    state0: PerturbationState,
    profile: &StationaryProfile,
    params: &PlasmaParams,
    scheme: &SchemeConfig,
    probes: &[WeightSpec],
    transverse: &[TransverseAxis],
) -> Result<Trajectory> {
    let stepper = Stepper::new(profile, params, *scheme, transverse.to_vec())?;
    let mut traj = Trajectory {
        probe_ids: probes.iter().map(|p| p.id()).collect(),
        rows: Vec::new(),
        steps: 0,
    };
    let mut state = state0;
    record(&mut traj, &state, &stepper, probes)?;
    let cadence = scheme.output_cadence;
    let mut next_record = cadence;
    while state.t < scheme.t_end - 1e-12 {
        state = stepper.step(&state)?;
        traj.steps += 1;
        if state.t + 1e-12 >= next_record || state.t >= scheme.t_end - 1e-12 {
            record(&mut traj, &state, &stepper, probes)?;
            while next_record <= state.t + 1e-12 {
                next_record += cadence;
            }
        }
    }
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    state: &PerturbationState,
    stepper: &Stepper,
    probes: &[WeightSpec],
) -> Result<()> {
    let profile = stepper.profile;
    let params = stepper.params;
    let grid = &profile.grid;
    let tlen = stepper.tlen;
    let fields = state.theta_fields();
    let mut norms = Vec::with_capacity(probes.len());
    for spec in probes {
        norms.push(weighted_norm(&fields, grid, &stepper.transverse, spec)?.value);
    }
    let psi_refs: Vec<&[f64]> = state.psi.iter().map(|p| p.as_slice()).collect();
    let e0 = energy_e0(
        &state.varphi,
        &psi_refs,
        &state.zeta,
        profile,
        &stepper.transverse,
        params,
    )?;

    let mut min_n = f64::INFINITY;
    let mut max_n = f64::NEG_INFINITY;
    let mut min_temp = f64::INFINITY;
    let mut max_temp = f64::NEG_INFINITY;
    let mut max_speed = 0.0f64;
    for i1 in 0..grid.num_nodes() {
        for it in 0..tlen {
            let idx = i1 * tlen + it;
            let n = (profile.v_t[i1] + state.varphi[idx]).exp();
            let temp = profile.t_t[i1] + state.zeta[idx];
            min_n = min_n.min(n);
            max_n = max_n.max(n);
            min_temp = min_temp.min(temp);
            max_temp = max_temp.max(temp);
            if temp > 0.0 {
                let u1 = profile.u_t[i1] + state.psi[0][idx];
                let cs = char_speeds(u1, temp, params)?;
                max_speed = max_speed.max(cs.max_abs());
            }
        }
    }

    // transverse-mean energy outflow through the wall
    let mut wall = 0.0;
    for it in 0..tlen {
        let temp = profile.t_t[0] + state.zeta[it];
        let u1 = profile.u_t[0] + state.psi[0][it];
        let mut psi_sq = 0.0;
        for p in &state.psi {
            psi_sq += p[it] * p[it];
        }
        let n0 = profile.n_t[0];
        let dens = 0.5 * n0 * params.r * temp * state.varphi[it] * state.varphi[it]
            + 0.5 * n0 * params.m * psi_sq
            + 0.5 * n0 * params.r / ((params.gamma - 1.0) * temp) * state.zeta[it] * state.zeta[it];
        wall += u1 * dens;
    }
    wall /= tlen as f64;

    traj.rows.push(TrajectoryRow {
        t: state.t,
        norms,
        e0,
        min_n,
        max_n,
        min_temp,
        max_temp,
        max_speed,
        wall_energy_flux: wall,
    });
    Ok(())
}

/// Export a trajectory as CSV: `t,norm_<probe-id>…,E0,min_n,min_T,max_speed`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: &mut W) -> io::Result<()> {
    write!(out, "t")?;
    for id in &traj.probe_ids {
        write!(out, ",norm_{id}")?;
    }
    writeln!(out, ",E0,min_n,min_T,max_speed")?;
    for row in &traj.rows {
        write!(out, "{:.16e}", row.t)?;
        for v in &row.norms {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(
            out,
            ",{:.16e},{:.16e},{:.16e},{:.16e}",
            row.e0, row.min_n, row.min_temp, row.max_speed
        )?;
    }
    Ok(())
}
