//! Damped-Newton solver for the nonlinear potential equation of the
//! perturbation system: given the log-density perturbation φ, find σ with
//!
//!   Δσ = e^{φ+ṽ} − e^{ṽ} − e^{−(σ+φ̃)} + e^{−φ̃},  σ(0) = σ(L) = 0.
//!
//! The exact exponential nonlinearity is used throughout; each Newton step
//! solves the tridiagonal system of the 1D Jacobian Δ_h − diag(e^{−(σ+φ̃)})
//! directly. With periodic transverse directions the step decouples into
//! transverse Fourier modes (the diagonal weight is replaced by its
//! transverse mean, with the exact residual still controlling convergence),
//! each mode giving an independent tridiagonal solve.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::TransverseAxis;
use crate::numerics::solve_tridiagonal;
use crate::stationary::StationaryProfile;

/// Default max-norm residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Default Newton iteration cap.
pub const DEFAULT_MAX_ITER: usize = 50;

/// One potential solve: the background profile, the source field φ on the
/// (possibly tensor) grid, and solver knobs. Boundary data is fixed: σ = 0 at
/// the wall and at the truncation boundary, periodic across the transverse
/// directions.
pub struct PoissonProblem<'a> {
    pub profile: &'a StationaryProfile,
    pub transverse: &'a [TransverseAxis],
    /// Log-density perturbation φ, length = nodes × transverse size.
    pub source: &'a [f64],
    pub tol: f64,
    pub max_iter: usize,
    /// Solve transverse modes in parallel (bit-identical to sequential).
    pub parallel_modes: bool,
}

impl<'a> PoissonProblem<'a> {
    pub fn new(profile: &'a StationaryProfile, source: &'a [f64]) -> Self {
        PoissonProblem {
            profile,
            transverse: &[],
            source,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            parallel_modes: false,
        }
    }

    pub fn with_transverse(mut self, transverse: &'a [TransverseAxis]) -> Self {
        self.transverse = transverse;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_parallel_modes(mut self, on: bool) -> Self {
        self.parallel_modes = on;
        self
    }

    fn tlen(&self) -> usize {
        self.transverse.iter().map(|a| a.m).product::<usize>().max(1)
    }
}

/// Converged potential perturbation.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub sigma: Vec<f64>,
    /// Newton updates taken.
    pub iterations: usize,
    /// Max-norm residual at exit.
    pub final_residual: f64,
}

/// Orthonormal real Fourier basis of a periodic axis together with the
/// eigenvalues of its centered second difference.
struct TransverseBasis {
    /// m x m, rows are basis vectors.
    rows: Vec<Vec<f64>>,
    /// Second-difference eigenvalue per row.
    eigen: Vec<f64>,
}

fn transverse_basis(axis: &TransverseAxis) -> TransverseBasis {
    let m = axis.m;
    let h = axis.h();
    let mut rows = Vec::with_capacity(m);
    let mut eigen = Vec::with_capacity(m);
    let norm0 = 1.0 / (m as f64).sqrt();
    rows.push(vec![norm0; m]);
    eigen.push(0.0);
    let pair_norm = (2.0 / m as f64).sqrt();
    let mut k = 1usize;
    while 2 * k < m {
        let mu = -4.0 / (h * h) * (std::f64::consts::PI * k as f64 / m as f64).sin().powi(2);
        let mut cos_row = Vec::with_capacity(m);
        let mut sin_row = Vec::with_capacity(m);
        for j in 0..m {
            let th = 2.0 * std::f64::consts::PI * (k * j) as f64 / m as f64;
            cos_row.push(pair_norm * th.cos());
            sin_row.push(pair_norm * th.sin());
        }
        rows.push(cos_row);
        eigen.push(mu);
        rows.push(sin_row);
        eigen.push(mu);
        k += 1;
    }
    if m % 2 == 0 {
        let mu = -4.0 / (h * h);
        let row: Vec<f64> = (0..m)
            .map(|j| if j % 2 == 0 { norm0 } else { -norm0 })
            .collect();
        rows.push(row);
        eigen.push(mu);
    }
    TransverseBasis { rows, eigen }
}

/// Apply a basis (or its transpose) along one transverse axis of a tensor
/// field laid out with the wall-normal index slowest.
fn apply_along_axis(
    field: &mut [f64],
    n1: usize,
    dims: &[usize],
    axis: usize,
    basis: &TransverseBasis,
    transpose: bool,
) {
    let m = dims[axis];
    let stride: usize = dims[axis + 1..].iter().product::<usize>().max(1);
    let tlen: usize = dims.iter().product::<usize>().max(1);
    let block = m * stride;
    let mut line = vec![0.0; m];
    let mut out = vec![0.0; m];
    for i1 in 0..n1 {
        let base = i1 * tlen;
        for outer in 0..tlen / block {
            for inner in 0..stride {
                let start = base + outer * block + inner;
                for j in 0..m {
                    line[j] = field[start + j * stride];
                }
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for j in 0..m {
                        let w = if transpose {
                            basis.rows[j][k]
                        } else {
                            basis.rows[k][j]
                        };
                        acc += w * line[j];
                    }
                    *o = acc;
                }
                for j in 0..m {
                    field[start + j * stride] = out[j];
                }
            }
        }
    }
}

struct Workspace {
    n1: usize,
    tlen: usize,
    dims: Vec<usize>,
    /// Squared transverse spacings, per axis.
    trans_h2: Vec<f64>,
    bases: Vec<TransverseBasis>,
    /// Combined transverse eigenvalue per flattened transverse index.
    mode_eigen: Vec<f64>,
    /// Laplacian stencil (sub, diag, sup) at interior nodes.
    lap: Vec<(f64, f64, f64)>,
    /// e^{ṽ}(e^{φ}−1) per node: the σ-independent part of the nonlinearity.
    source_term: Vec<f64>,
    exp_mphi_t: Vec<f64>,
}

impl Workspace {
    fn build(problem: &PoissonProblem) -> Result<Workspace> {
        let grid = &problem.profile.grid;
        let n1 = grid.num_nodes();
        let tlen = problem.tlen();
        Error::require(
            problem.source.len() == n1 * tlen,
            format!(
                "source length {} != grid size {}",
                problem.source.len(),
                n1 * tlen
            ),
        )?;
        Error::require(
            problem.source.iter().all(|v| v.is_finite()),
            "source must be finite",
        )?;
        let dims: Vec<usize> = problem.transverse.iter().map(|a| a.m).collect();
        let bases: Vec<TransverseBasis> =
            problem.transverse.iter().map(transverse_basis).collect();
        // combined eigenvalues over the flattened transverse index
        let mut mode_eigen = vec![0.0; tlen];
        for (axis, basis) in bases.iter().enumerate() {
            let stride: usize = dims[axis + 1..].iter().product::<usize>().max(1);
            for (it, mu) in mode_eigen.iter_mut().enumerate() {
                let k = (it / stride) % dims[axis];
                *mu += basis.eigen[k];
            }
        }
        let mut lap = Vec::with_capacity(n1.saturating_sub(2));
        for j in 1..n1 - 1 {
            let hm = grid.x(j) - grid.x(j - 1);
            let hp = grid.x(j + 1) - grid.x(j);
            lap.push((
                2.0 / (hm * (hm + hp)),
                -2.0 / (hm * hp),
                2.0 / (hp * (hm + hp)),
            ));
        }
        let mut source_term = vec![0.0; n1 * tlen];
        for i1 in 0..n1 {
            let ev = problem.profile.n_t[i1]; // e^{ṽ} = ñ
            for it in 0..tlen {
                let idx = i1 * tlen + it;
                source_term[idx] = ev * (problem.source[idx].exp() - 1.0);
            }
        }
        let exp_mphi_t = problem
            .profile
            .phi_t
            .iter()
            .map(|&p| (-p).exp())
            .collect();
        Ok(Workspace {
            n1,
            tlen,
            dims,
            trans_h2: problem.transverse.iter().map(|a| a.h() * a.h()).collect(),
            bases,
            mode_eigen,
            lap,
            source_term,
            exp_mphi_t,
        })
    }

    /// Exact residual F(σ) = Δσ − N(σ); zero on the Dirichlet rows.
    fn residual(&self, sigma: &[f64]) -> Vec<f64> {
        let (n1, t) = (self.n1, self.tlen);
        let mut f = vec![0.0; sigma.len()];
        for i1 in 1..n1 - 1 {
            let (a, b, c) = self.lap[i1 - 1];
            for it in 0..t {
                let idx = i1 * t + it;
                let mut lap = a * sigma[idx - t] + b * sigma[idx] + c * sigma[idx + t];
                for (axis, &dim) in self.dims.iter().enumerate() {
                    let stride: usize =
                        self.dims[axis + 1..].iter().product::<usize>().max(1);
                    let ia = (it / stride) % dim;
                    let up = idx + (((ia + 1) % dim) * stride) - ia * stride;
                    let dn = idx + (((ia + dim - 1) % dim) * stride) - ia * stride;
                    lap += (sigma[up] - 2.0 * sigma[idx] + sigma[dn]) / self.trans_h2[axis];
                }
                let nonlin = self.source_term[idx]
                    - self.exp_mphi_t[i1] * ((-sigma[idx]).exp() - 1.0);
                f[idx] = lap - nonlin;
            }
        }
        f
    }

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

/// Solve the potential equation. `guess` defaults to zero.
pub fn poisson_solve(problem: &PoissonProblem, guess: Option<&[f64]>) -> Result<PoissonSolution> {
    let ws = Workspace::build(problem)?;
    let n1 = ws.n1;
    let t = ws.tlen;

    let mut sigma = match guess {
        Some(g) => {
            Error::require(g.len() == n1 * t, "guess length mismatch")?;
            let mut s = g.to_vec();
            // enforce the boundary rows
            for it in 0..t {
                s[it] = 0.0;
                s[(n1 - 1) * t + it] = 0.0;
            }
            s
        }
        None => vec![0.0; n1 * t],
    };

    let mut f = ws.residual(&sigma);
    let mut res = Workspace::max_abs(&f);
    let mut iterations = 0usize;

    while res >= problem.tol {
        if iterations >= problem.max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
        // Newton weight e^{−(σ+φ̃)}; strictly positive or the monotone
        // structure is gone
        let mut wbar = vec![0.0; n1];
        for i1 in 0..n1 {
            let mut acc = 0.0;
            for it in 0..t {
                let w = ws.exp_mphi_t[i1] * (-sigma[i1 * t + it]).exp();
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::NoConvergence {
                        iterations,
                        residual: res,
                    });
                }
                acc += w;
            }
            wbar[i1] = acc / t as f64;
        }

        // rhs = −F, transformed into transverse modes
        let mut rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        for (axis, basis) in ws.bases.iter().enumerate() {
            apply_along_axis(&mut rhs, n1, &ws.dims, axis, basis, false);
        }

        // per-mode tridiagonal solves over the interior nodes
        let interior = n1 - 2;
        let solve_mode = |k: usize| -> Result<Vec<f64>> {
            let mu = ws.mode_eigen[k];
            let mut sub = vec![0.0; interior];
            let mut diag = vec![0.0; interior];
            let mut sup = vec![0.0; interior];
            let mut r = vec![0.0; interior];
            for j in 0..interior {
                let (a, b, c) = ws.lap[j];
                sub[j] = a;
                diag[j] = b + mu - wbar[j + 1];
                sup[j] = c;
                r[j] = rhs[(j + 1) * t + k];
            }
            solve_tridiagonal(&sub, &diag, &sup, &mut r)?;
            Ok(r)
        };
        let mode_results: Vec<Result<Vec<f64>>> = if problem.parallel_modes && t > 1 {
            exec::map_indexed(t, solve_mode)
        } else {
            exec::map_indexed_seq(t, solve_mode)
        };
        let mut delta = vec![0.0; n1 * t];
        for (k, res_k) in mode_results.into_iter().enumerate() {
            let col = res_k?;
            for j in 0..interior {
                delta[(j + 1) * t + k] = col[j];
            }
        }
        // back to physical space
        for (axis, basis) in ws.bases.iter().enumerate().rev() {
            apply_along_axis(&mut delta, n1, &ws.dims, axis, basis, true);
        }

        // line search on the exact residual
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1.0 / 1024.0 {
            let trial: Vec<f64> = sigma
                .iter()
                .zip(delta.iter())
                .map(|(s, d)| s + step * d)
                .collect();
            let ftrial = ws.residual(&trial);
            let rtrial = Workspace::max_abs(&ftrial);
            if rtrial < res {
                sigma = trial;
                f = ftrial;
                res = rtrial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
    }

    Ok(PoissonSolution {
        sigma,
        iterations,
        final_residual: res,
    })
}

/// Max-norm residual of the potential equation for a given σ, using the same
/// discrete operator as the solver. Lets callers verify that an exposed σ is
/// current for its source.
pub fn poisson_residual_max(problem: &PoissonProblem, sigma: &[f64]) -> Result<f64> {
    let ws = Workspace::build(problem)?;
    Error::require(
        sigma.len() == ws.n1 * ws.tlen,
        "poisson_residual_max: sigma length mismatch",
    )?;
    Ok(Workspace::max_abs(&ws.residual(sigma)))
}

/// Ratio of the weighted order-2 norm of σ to the weighted order-0 norm of
/// the source, the discrete form of the elliptic gain bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipticRatio {
    /// Source norm was zero; the ratio is undefined.
    UndefinedZeroSource,
    Ratio(f64),
}

pub fn elliptic_estimate_check(
    problem: &PoissonProblem,
    solution: &PoissonSolution,
    weight: &crate::diagnostics::WeightSpec,
) -> Result<EllipticRatio> {
    use crate::diagnostics::{weighted_norm, WeightSpec};
    let grid = &problem.profile.grid;
    let num = weighted_norm(
        &[&solution.sigma],
        grid,
        problem.transverse,
        &WeightSpec {
            kind: weight.kind,
            order: 2,
        },
    )?;
    let den = weighted_norm(
        &[problem.source],
        grid,
        problem.transverse,
        &WeightSpec {
            kind: weight.kind,
            order: 0,
        },
    )?;
    if den.value == 0.0 {
        return Ok(EllipticRatio::UndefinedZeroSource);
    }
    Ok(EllipticRatio::Ratio(num.value / den.value))
}
