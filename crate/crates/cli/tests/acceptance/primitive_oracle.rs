//! Independent second solver used as a cross-check oracle: evolves the flow
//! in primitive variables (log-density, velocity, temperature) with its own
//! potential solve under wall data, then converts to perturbation variables.
//! Shares only the low-level tridiagonal kernel with the implementation under
//! test; equations, variables, and boundary handling are assembled here from
//! scratch.

use sheath_core::grid::HalfLineGrid;
use sheath_core::model::PlasmaParams;
use sheath_core::numerics::solve_tridiagonal;
use sheath_core::stationary::StationaryProfile;

pub struct PrimitiveState {
    pub t: f64,
    /// log n
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub temp: Vec<f64>,
    /// full potential with wall value phi_b
    pub phi: Vec<f64>,
}

pub struct PrimitiveSolver<'a> {
    pub profile: &'a StationaryProfile,
    pub params: &'a PlasmaParams,
    pub cfl: f64,
    grid: &'a HalfLineGrid,
}

impl<'a> PrimitiveSolver<'a> {
    pub fn new(profile: &'a StationaryProfile, params: &'a PlasmaParams, cfl: f64) -> Self {
        PrimitiveSolver {
            profile,
            params,
            cfl,
            grid: &profile.grid,
        }
    }

    /// Initial primitive state from perturbation fields.
    pub fn from_perturbation(
        &self,
        varphi: &[f64],
        psi1: &[f64],
        zeta: &[f64],
        sigma: &[f64],
    ) -> PrimitiveState {
        let n = self.grid.num_nodes();
        let mut s = PrimitiveState {
            t: 0.0,
            v: vec![0.0; n],
            u: vec![0.0; n],
            temp: vec![0.0; n],
            phi: vec![0.0; n],
        };
        for j in 0..n {
            s.v[j] = self.profile.v_t[j] + varphi[j];
            s.u[j] = self.profile.u_t[j] + psi1[j];
            s.temp[j] = self.profile.t_t[j] + zeta[j];
            s.phi[j] = self.profile.phi_t[j] + sigma[j];
        }
        s
    }

    /// Perturbation view of a primitive state.
    pub fn to_perturbation(&self, s: &PrimitiveState) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.num_nodes();
        let mut varphi = vec![0.0; n];
        let mut psi1 = vec![0.0; n];
        let mut zeta = vec![0.0; n];
        let mut sigma = vec![0.0; n];
        for j in 0..n {
            varphi[j] = s.v[j] - self.profile.v_t[j];
            psi1[j] = s.u[j] - self.profile.u_t[j];
            zeta[j] = s.temp[j] - self.profile.t_t[j];
            sigma[j] = s.phi[j] - self.profile.phi_t[j];
        }
        (varphi, psi1, zeta, sigma)
    }

    fn minmod(a: f64, b: f64) -> f64 {
        if a > 0.0 && b > 0.0 {
            a.min(b)
        } else if a < 0.0 && b < 0.0 {
            a.max(b)
        } else {
            0.0
        }
    }

    fn slope(&self, q: &[f64], j: usize) -> f64 {
        let n = self.grid.num_nodes();
        if j == 0 || j + 1 >= n {
            return 0.0;
        }
        Self::minmod(
            (q[j + 1] - q[j]) / self.grid.h(j),
            (q[j] - q[j - 1]) / self.grid.h(j - 1),
        )
    }

    fn upwind(&self, q: &[f64], j: usize, speed: f64) -> f64 {
        let n = self.grid.num_nodes();
        if speed <= 0.0 {
            if j + 1 >= n {
                return 0.0;
            }
            let first = (q[j + 1] - q[j]) / self.grid.h(j);
            if j == 0 {
                // one-sided second order at the wall; a fabricated zero
                // slope would corrupt the limited correction
                return self.centered(q, 0);
            }
            if j + 2 >= n {
                return first;
            }
            first - 0.5 * (self.slope(q, j + 1) - self.slope(q, j))
        } else {
            if j == 0 {
                return (q[1] - q[0]) / self.grid.h(0);
            }
            let first = (q[j] - q[j - 1]) / self.grid.h(j - 1);
            if j == 1 || j + 1 >= n {
                return first;
            }
            first + 0.5 * (self.slope(q, j) - self.slope(q, j - 1))
        }
    }

    fn centered(&self, q: &[f64], j: usize) -> f64 {
        let n = self.grid.num_nodes();
        let g = self.grid;
        if j == 0 {
            let (h1, h2) = (g.h(0), g.h(1));
            let s = h1 + h2;
            -q[0] * (2.0 * h1 + h2) / (h1 * s) + q[1] * s / (h1 * h2) - q[2] * h1 / (h2 * s)
        } else if j + 1 >= n {
            let (h1, h2) = (g.h(n - 3), g.h(n - 2));
            let s = h1 + h2;
            q[n - 3] * h2 / (h1 * s) - q[n - 2] * s / (h1 * h2)
                + q[n - 1] * (h1 + 2.0 * h2) / (h2 * s)
        } else {
            let (h1, h2) = (g.h(j - 1), g.h(j));
            (h1 * h1 * q[j + 1] - h2 * h2 * q[j - 1] - (h1 * h1 - h2 * h2) * q[j])
                / (h1 * h2 * (h1 + h2))
        }
    }

    /// Newton solve of the wall-data potential equation
    /// D2 phi = e^v − e^{−phi}, phi(0) = phi_b, phi(L) = background value.
    pub fn solve_potential(&self, v: &[f64], phi: &mut Vec<f64>) {
        let n = self.grid.num_nodes();
        phi[0] = self.params.phi_b;
        phi[n - 1] = self.profile.phi_t[n - 1];
        let interior = n - 2;
        for _ in 0..60 {
            let mut sub = vec![0.0; interior];
            let mut diag = vec![0.0; interior];
            let mut sup = vec![0.0; interior];
            let mut rhs = vec![0.0; interior];
            let mut res = 0.0f64;
            for k in 0..interior {
                let j = k + 1;
                let hm = self.grid.h(j - 1);
                let hp = self.grid.h(j);
                let a = 2.0 / (hm * (hm + hp));
                let b = -2.0 / (hm * hp);
                let c = 2.0 / (hp * (hm + hp));
                let lap = a * phi[j - 1] + b * phi[j] + c * phi[j + 1];
                let f = lap - (v[j].exp() - (-phi[j]).exp());
                res = res.max(f.abs());
                sub[k] = a;
                diag[k] = b - (-phi[j]).exp();
                sup[k] = c;
                rhs[k] = -f;
            }
            if res < 1e-12 {
                break;
            }
            solve_tridiagonal(&sub, &diag, &sup, &mut rhs).expect("oracle potential solve");
            for k in 0..interior {
                phi[k + 1] += rhs[k];
            }
        }
    }

    fn rates(&self, s: &PrimitiveState) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.num_nodes();
        let p = self.params;
        let mut dv = vec![0.0; n];
        let mut du = vec![0.0; n];
        let mut dtemp = vec![0.0; n];
        for j in 0..n - 1 {
            let speed = s.u[j];
            let ux = self.centered(&s.u, j);
            dv[j] = -speed * self.upwind(&s.v, j, speed) - ux;
            du[j] = -speed * self.upwind(&s.u, j, speed)
                - p.r / p.m * s.temp[j] * self.centered(&s.v, j)
                - p.r / p.m * self.centered(&s.temp, j)
                + self.centered(&s.phi, j) / p.m;
            dtemp[j] =
                -speed * self.upwind(&s.temp, j, speed) - (p.gamma - 1.0) * s.temp[j] * ux;
        }
        (dv, du, dtemp)
    }

    fn dt(&self, s: &PrimitiveState) -> f64 {
        let n = self.grid.num_nodes();
        let p = self.params;
        let mut dt = f64::INFINITY;
        for j in 0..n {
            let h = if j == 0 {
                self.grid.h(0)
            } else if j == n - 1 {
                self.grid.h(n - 2)
            } else {
                self.grid.h(j - 1).min(self.grid.h(j))
            };
            let grt = p.gamma * p.r * s.temp[j];
            // wave-speed family assembled independently of the library
            let rad = ((p.m - 1.0) * (p.m - 1.0) * s.u[j] * s.u[j] + 4.0 * grt).sqrt();
            let lam1 = 0.5 * ((p.m + 1.0) * s.u[j] - rad);
            let lam3 = 0.5 * ((p.m + 1.0) * s.u[j] + rad);
            let stencil = s.u[j].abs() + (grt / p.m).sqrt();
            let speed = lam1.abs().max(lam3.abs()).max(stencil);
            dt = dt.min(h / speed);
        }
        self.cfl * dt
    }

    fn clamp(&self, s: &mut PrimitiveState) {
        let n = self.grid.num_nodes();
        s.v[n - 1] = self.profile.v_t[n - 1];
        s.u[n - 1] = self.profile.u_t[n - 1];
        s.temp[n - 1] = self.profile.t_t[n - 1];
    }

    /// Heun step mirroring the structure of the solver under test.
    pub fn step(&self, s: &PrimitiveState, t_end: f64) -> PrimitiveState {
        let n = self.grid.num_nodes();
        let mut dt = self.dt(s);
        let remaining = t_end - s.t;
        if dt >= remaining {
            dt = remaining;
        }
        let (dv1, du1, dtemp1) = self.rates(s);
        let mut stage = PrimitiveState {
            t: s.t + dt,
            v: (0..n).map(|j| s.v[j] + dt * dv1[j]).collect(),
            u: (0..n).map(|j| s.u[j] + dt * du1[j]).collect(),
            temp: (0..n).map(|j| s.temp[j] + dt * dtemp1[j]).collect(),
            phi: s.phi.clone(),
        };
        self.clamp(&mut stage);
        self.solve_potential(&stage.v.clone(), &mut stage.phi);

        let (dv2, du2, dtemp2) = self.rates(&stage);
        let mut out = PrimitiveState {
            t: s.t + dt,
            v: (0..n)
                .map(|j| 0.5 * s.v[j] + 0.5 * (stage.v[j] + dt * dv2[j]))
                .collect(),
            u: (0..n)
                .map(|j| 0.5 * s.u[j] + 0.5 * (stage.u[j] + dt * du2[j]))
                .collect(),
            temp: (0..n)
                .map(|j| 0.5 * s.temp[j] + 0.5 * (stage.temp[j] + dt * dtemp2[j]))
                .collect(),
            phi: stage.phi.clone(),
        };
        self.clamp(&mut out);
        self.solve_potential(&out.v.clone(), &mut out.phi);
        out
    }

    pub fn run_to(&self, mut s: PrimitiveState, t_end: f64) -> PrimitiveState {
        while s.t < t_end - 1e-12 {
            s = self.step(&s, t_end);
        }
        s
    }
}
