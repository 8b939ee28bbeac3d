//! Weighted Sobolev norms, the diagnostic energy density, decay-law fitting,
//! and the pointwise positivity checker for the dissipation quadratic form of
//! the marginal regime.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{HalfLineGrid, TransverseAxis};
use crate::model::{
    algebraic_decay_slope, classify_regime, solve_lambda0, PlasmaParams, Regime,
};
use crate::numerics::{d1_centered, d1_left, d1_right, d2_centered, fit_line, sym3_eigenvalues};
use crate::stationary::StationaryProfile;

/// Weight family for norms: (1+βx₁)^α or e^{λx₁}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    Algebraic { alpha: f64, beta: f64 },
    Exponential { lambda: f64 },
}

/// A weighted Sobolev norm specification: weight family plus derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    /// Sobolev order (0, 1, or 2).
    pub order: usize,
}

impl WeightSpec {
    pub fn algebraic(alpha: f64, beta: f64, order: usize) -> Self {
        WeightSpec {
            kind: WeightKind::Algebraic { alpha, beta },
            order,
        }
    }

    pub fn exponential(lambda: f64, order: usize) -> Self {
        WeightSpec {
            kind: WeightKind::Exponential { lambda },
            order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            WeightKind::Algebraic { beta, .. } => {
                Error::require(beta > 0.0, "algebraic weight needs beta > 0")?
            }
            WeightKind::Exponential { lambda } => {
                Error::require(lambda > 0.0, "exponential weight needs lambda > 0")?
            }
        }
        Error::require(self.order <= 2, "weighted norms support order <= 2")
    }

    /// Weight value at abscissa x1.
    pub fn weight(&self, x1: f64) -> f64 {
        match self.kind {
            WeightKind::Algebraic { alpha, beta } => (1.0 + beta * x1).powf(alpha),
            WeightKind::Exponential { lambda } => (lambda * x1).exp(),
        }
    }

    /// Stable identifier used in CSV column names.
    pub fn id(&self) -> String {
        match self.kind {
            WeightKind::Algebraic { alpha, beta } => {
                format!("alg_a{alpha}_b{beta}_i{}", self.order)
            }
            WeightKind::Exponential { lambda } => format!("exp_l{lambda}_i{}", self.order),
        }
    }
}

/// Result of a weighted norm evaluation. `clipped` flags overflow of the
/// weight-field product; the value is then a saturated lower bound.
#[derive(Debug, Clone, Copy)]
pub struct WeightedNorm {
    pub value: f64,
    pub clipped: bool,
}

/// Tensor-field layout: wall-normal index slowest, transverse axes row-major.
struct Layout<'a> {
    grid: &'a HalfLineGrid,
    transverse: &'a [TransverseAxis],
    tlen: usize,
}

impl<'a> Layout<'a> {
    fn new(grid: &'a HalfLineGrid, transverse: &'a [TransverseAxis]) -> Layout<'a> {
        let tlen = transverse.iter().map(|a| a.m).product::<usize>().max(1);
        Layout {
            grid,
            transverse,
            tlen,
        }
    }

    fn total(&self) -> usize {
        self.grid.num_nodes() * self.tlen
    }

    fn stride(&self, axis: usize) -> usize {
        self.transverse[axis + 1..].iter().map(|a| a.m).product::<usize>().max(1)
    }

    /// Wall-normal first derivative (second order, one-sided at the ends).
    fn d_x1(&self, f: &[f64]) -> Vec<f64> {
        let n1 = self.grid.num_nodes();
        let t = self.tlen;
        let mut out = vec![0.0; f.len()];
        for i1 in 0..n1 {
            let (ja, jb, jc, which) = if i1 == 0 {
                (0, 1, 2, 0u8)
            } else if i1 == n1 - 1 {
                (n1 - 3, n1 - 2, n1 - 1, 2)
            } else {
                (i1 - 1, i1, i1 + 1, 1)
            };
            let h1 = self.grid.x(jb) - self.grid.x(ja);
            let h2 = self.grid.x(jc) - self.grid.x(jb);
            for it in 0..t {
                let (fa, fb, fc) = (f[ja * t + it], f[jb * t + it], f[jc * t + it]);
                out[i1 * t + it] = match which {
                    0 => d1_left(fa, fb, fc, h1, h2),
                    1 => d1_centered(fa, fb, fc, h1, h2),
                    _ => d1_right(fa, fb, fc, h1, h2),
                };
            }
        }
        out
    }

    /// Wall-normal second derivative (ends use the nearest 3-point stencil).
    fn d2_x1(&self, f: &[f64]) -> Vec<f64> {
        let n1 = self.grid.num_nodes();
        let t = self.tlen;
        let mut out = vec![0.0; f.len()];
        for i1 in 0..n1 {
            let (ja, jb, jc) = if i1 == 0 {
                (0, 1, 2)
            } else if i1 == n1 - 1 {
                (n1 - 3, n1 - 2, n1 - 1)
            } else {
                (i1 - 1, i1, i1 + 1)
            };
            let h1 = self.grid.x(jb) - self.grid.x(ja);
            let h2 = self.grid.x(jc) - self.grid.x(jb);
            for it in 0..t {
                out[i1 * t + it] = d2_centered(
                    f[ja * t + it],
                    f[jb * t + it],
                    f[jc * t + it],
                    h1,
                    h2,
                );
            }
        }
        out
    }

    fn trans_neighbors(&self, it: usize, axis: usize) -> (usize, usize) {
        let stride = self.stride(axis);
        let m = self.transverse[axis].m;
        let ia = (it / stride) % m;
        let up = it + ((ia + 1) % m) * stride - ia * stride;
        let dn = it + ((ia + m - 1) % m) * stride - ia * stride;
        (dn, up)
    }

    /// Periodic centered first derivative along transverse axis `axis`.
    fn d_trans(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let n1 = self.grid.num_nodes();
        let t = self.tlen;
        let h = self.transverse[axis].h();
        let mut out = vec![0.0; f.len()];
        for i1 in 0..n1 {
            for it in 0..t {
                let (dn, up) = self.trans_neighbors(it, axis);
                out[i1 * t + it] = (f[i1 * t + up] - f[i1 * t + dn]) / (2.0 * h);
            }
        }
        out
    }

    /// Periodic second derivative along transverse axis `axis`.
    fn d2_trans(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let n1 = self.grid.num_nodes();
        let t = self.tlen;
        let h = self.transverse[axis].h();
        let mut out = vec![0.0; f.len()];
        for i1 in 0..n1 {
            for it in 0..t {
                let (dn, up) = self.trans_neighbors(it, axis);
                out[i1 * t + it] =
                    (f[i1 * t + up] - 2.0 * f[i1 * t + it] + f[i1 * t + dn]) / (h * h);
            }
        }
        out
    }

    /// Quadrature weight of node (i1, ·): trapezoid in x1 times the uniform
    /// periodic cell volume.
    fn quad_weights_x1(&self) -> Vec<f64> {
        let mut w = self.grid.trapezoid_weights();
        let tvol: f64 = self.transverse.iter().map(|a| a.h()).product();
        for v in w.iter_mut() {
            *v *= tvol;
        }
        w
    }
}

/// Weighted Sobolev norm of one or more fields over the (possibly tensor)
/// grid: sqrt of the quadrature of W(x₁)·Σ_{|s|<=order} (∂^s f)² summed over
/// all fields. Derivatives are centered differences (one-sided at the ends).
pub fn weighted_norm(
    fields: &[&[f64]],
    grid: &HalfLineGrid,
    transverse: &[TransverseAxis],
    spec: &WeightSpec,
) -> Result<WeightedNorm> {
    spec.validate()?;
    let layout = Layout::new(grid, transverse);
    let total = layout.total();
    for f in fields {
        Error::require(
            f.len() == total,
            format!("field length {} != grid size {}", f.len(), total),
        )?;
    }
    let wq = layout.quad_weights_x1();
    let t = layout.tlen;
    let n_axes = transverse.len();

    let mut sum = 0.0f64;
    let mut clipped = false;
    for f in fields {
        // collect every multi-index derivative up to the order
        let mut terms: Vec<Vec<f64>> = vec![f.to_vec()];
        if spec.order >= 1 {
            terms.push(layout.d_x1(f));
            for a in 0..n_axes {
                terms.push(layout.d_trans(f, a));
            }
        }
        if spec.order >= 2 {
            terms.push(layout.d2_x1(f));
            let dx1 = layout.d_x1(f);
            for a in 0..n_axes {
                terms.push(layout.d2_trans(f, a));
                terms.push(layout.d_trans(&dx1, a)); // mixed wall-normal/transverse
                for b in a + 1..n_axes {
                    let da = layout.d_trans(f, a);
                    terms.push(layout.d_trans(&da, b)); // mixed transverse pair
                }
            }
        }
        for i1 in 0..grid.num_nodes() {
            let w = spec.weight(grid.x(i1)) * wq[i1];
            for it in 0..t {
                let idx = i1 * t + it;
                let mut local = 0.0;
                for term in &terms {
                    local += term[idx] * term[idx];
                }
                let contrib = w * local;
                if contrib.is_finite() {
                    sum += contrib;
                } else {
                    clipped = true;
                    sum = f64::MAX;
                }
            }
        }
    }
    Ok(WeightedNorm {
        value: sum.sqrt(),
        clipped,
    })
}

/// Diagnostic energy: quadrature of
/// (ñ/2)RTφ² + (ñ/2)m|ψ|² + (ñR/(2(γ−1)T))ζ² with T = T̃ + ζ.
pub fn energy_e0(
    varphi: &[f64],
    psi: &[&[f64]],
    zeta: &[f64],
    profile: &StationaryProfile,
    transverse: &[TransverseAxis],
    params: &PlasmaParams,
) -> Result<f64> {
    let layout = Layout::new(&profile.grid, transverse);
    let total = layout.total();
    Error::require(
        varphi.len() == total && zeta.len() == total && psi.iter().all(|p| p.len() == total),
        "energy_e0: field sizes disagree with the grid",
    )?;
    let wq = layout.quad_weights_x1();
    let t = layout.tlen;
    let mut sum = 0.0;
    for i1 in 0..profile.grid.num_nodes() {
        let n = profile.n_t[i1];
        let t_base = profile.t_t[i1];
        for it in 0..t {
            let idx = i1 * t + it;
            let temp = t_base + zeta[idx];
            if temp <= 0.0 {
                return Err(Error::PositivityLost {
                    what: "temperature",
                    value: temp,
                    node: idx,
                });
            }
            let mut psi_sq = 0.0;
            for p in psi {
                psi_sq += p[idx] * p[idx];
            }
            let dens = 0.5 * n * params.r * temp * varphi[idx] * varphi[idx]
                + 0.5 * n * params.m * psi_sq
                + 0.5 * n * params.r / ((params.gamma - 1.0) * temp) * zeta[idx] * zeta[idx];
            sum += wq[i1] * dens;
        }
    }
    Ok(sum)
}

/// Decay law family fitted against a time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayModel {
    /// value ≈ A·e^{−rate·t}
    Exponential,
    /// value ≈ A·(1+βt)^{−rate}
    Algebraic { beta: f64 },
}

/// Fitted decay law.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay exponent (μ for exponential, r for algebraic).
    pub rate: f64,
    /// Fitted prefactor A.
    pub amplitude: f64,
    pub r_squared: f64,
    /// [t_lo, t_hi] actually used.
    pub window: (f64, f64),
    /// True when nonpositive samples had to be dropped from the window.
    pub clipped: bool,
}

/// Least-squares fit of a decay law on `series`, optionally restricted to a
/// window. Nonpositive values inside the window are dropped (and flagged);
/// at least 8 usable points are required.
pub fn fit_decay(
    series: &[(f64, f64)],
    model: DecayModel,
    window: Option<(f64, f64)>,
) -> Result<DecayFit> {
    if let DecayModel::Algebraic { beta } = model {
        Error::require(beta > 0.0, "algebraic decay model needs beta > 0")?;
    }
    let in_window = |t: f64| match window {
        Some((lo, hi)) => t >= lo && t <= hi,
        None => true,
    };
    let selected: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| in_window(*t))
        .collect();
    let usable: Vec<(f64, f64)> = selected.iter().copied().filter(|(_, v)| *v > 0.0).collect();
    let clipped = usable.len() < selected.len();
    if usable.len() < 8 {
        return Err(Error::FitUnderdetermined {
            got: usable.len(),
            need: 8,
        });
    }
    let xs: Vec<f64> = usable
        .iter()
        .map(|(t, _)| match model {
            DecayModel::Exponential => *t,
            DecayModel::Algebraic { beta } => (1.0 + beta * *t).ln(),
        })
        .collect();
    let ys: Vec<f64> = usable.iter().map(|(_, v)| v.ln()).collect();
    let (a, b, r2) = fit_line(&xs, &ys)?;
    let t_lo = usable.iter().map(|(t, _)| *t).fold(f64::INFINITY, f64::min);
    let t_hi = usable.iter().map(|(t, _)| *t).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        model,
        rate: -b,
        amplitude: a.exp(),
        r_squared: r2,
        window: (t_lo, t_hi),
        clipped,
    })
}

/// Exponent r of the (1+βt)^{−r} bound on the squared weighted norm for a
/// data weight exponent `lambda` and a solution weight exponent `epsilon`:
/// λ−ε in the strict regime, (λ−ε)/3 in the marginal one.
pub fn algebraic_decay_exponent(lambda: f64, epsilon: f64, marginal: bool) -> f64 {
    if marginal {
        (lambda - epsilon) / 3.0
    } else {
        lambda - epsilon
    }
}

/// Pointwise coefficients and verdicts of the dissipation quadratic form in
/// (φ, ψ₁, ζ) for the marginal regime.
#[derive(Debug, Clone)]
pub struct QFormReport {
    pub x1: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub q3: Vec<f64>,
    pub q4: Vec<f64>,
    pub q5: Vec<f64>,
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    /// q1, q3, q4 all positive.
    pub flags44: Vec<bool>,
    /// both discriminants q2²−4q1q3 and q5²−4q3q4 negative.
    pub flags45: Vec<bool>,
    /// q1q5² + q4q2² − 4q1q3q4 negative.
    pub flags46: Vec<bool>,
    /// The cubic expression of the third condition, per node.
    pub expr46: Vec<f64>,
    /// Brute-force smallest eigenvalue of the assembled 3x3 form, per node.
    pub min_eig: Vec<f64>,
    /// min over nodes of (smallest eigenvalue)·B².
    pub min_scaled_eig: f64,
    /// Empirical constant: min over nodes of −expr46·B².
    pub margin46: f64,
    /// Critical weight exponent for this adiabatic index, for reference.
    pub lambda0: f64,
}

impl QFormReport {
    pub fn all44(&self) -> bool {
        self.flags44.iter().all(|&b| b)
    }
    pub fn all45(&self) -> bool {
        self.flags45.iter().all(|&b| b)
    }
    pub fn all46(&self) -> bool {
        self.flags46.iter().all(|&b| b)
    }
    /// The three pointwise conditions together must coincide with positive
    /// definiteness of the assembled matrix at every node.
    pub fn eigen_agrees_with_flags(&self) -> bool {
        (0..self.x1.len()).all(|j| {
            (self.flags44[j] && self.flags45[j] && self.flags46[j]) == (self.min_eig[j] > 0.0)
        })
    }
}

struct QRow {
    q: [f64; 5],
    b: f64,
    s: f64,
    ok44: bool,
    ok45: bool,
    ok46: bool,
    expr46: f64,
    min_eig: f64,
}

/// Evaluate the quadratic-form coefficients and positivity conditions on the
/// grid for weight exponent `epsilon` and weight scale `beta`.
///
/// Preconditions: marginal regime with phi_b > 0, epsilon > 0, and
/// 0 < beta <= Γ·√phi_b. Values of `epsilon` at or above the critical
/// exponent are allowed: probing them is how the breakdown of positivity is
/// demonstrated, and the flags record it.
pub fn qform_check(
    epsilon: f64,
    beta: f64,
    params: &PlasmaParams,
    grid: &HalfLineGrid,
) -> Result<QFormReport> {
    params.validate()?;
    let regime = classify_regime(params);
    Error::require(
        regime == Regime::DegenerateBohm,
        format!(
            "quadratic-form check requires the marginal regime, got {}",
            regime.name()
        ),
    )?;
    Error::require(params.phi_b > 0.0, "quadratic-form check needs phi_b > 0")?;
    Error::require(epsilon > 0.0, "epsilon must be > 0")?;
    let slope = algebraic_decay_slope(params);
    let beta_cap = slope * params.phi_b.sqrt();
    Error::require(
        beta > 0.0 && beta <= beta_cap * (1.0 + 1e-12),
        format!("beta must lie in (0, {beta_cap}], got {beta}"),
    )?;

    let r = params.r;
    let t = params.t_inf;
    let g = params.gamma;
    let rt = r * t;
    let u_abs = params.u_inf.abs();
    let gamma2 = slope * slope;
    let s_denom_offset = params.phi_b.powf(-0.5) / slope;
    let eps = epsilon;
    let cube = eps * (eps - 1.0) * (eps - 2.0);

    let nodes = grid.nodes().to_vec();
    let rows: Vec<QRow> = exec::map_indexed(nodes.len(), |j| {
        let x = nodes[j];
        let b = x + 1.0 / beta;
        let s = (x + 1.0 / beta) / (x + s_denom_offset);
        let s2 = s * s;
        let s3 = s2 * s;
        let bi = 1.0 / (b * b) / gamma2;
        let q1 = 0.5 * eps * rt
            + bi * (0.5 * (1.0 - rt) * eps * s2 - 0.5 * gamma2 * cube + (g * rt - 1.0) * s3);
        let q2 = -rt * eps + bi * (2.0 * eps * rt * s2 + 2.0 * (1.0 - g * rt) * s3);
        let q3 = 0.5 * eps * g * rt + bi * (0.5 * (1.0 - rt) * eps * s2 + (3.0 * g * rt + 3.0) * s3);
        let q4 = 0.5 * eps * r / ((g - 1.0) * t)
            + bi * (-0.5 * eps * r / ((g - 1.0) * t) * s2 + g * r / ((g - 1.0) * t) * s3);
        let q5 = -eps * r + 2.0 * eps * r * bi * s2;

        let ok44 = q1 > 0.0 && q3 > 0.0 && q4 > 0.0;
        let ok45 = q2 * q2 - 4.0 * q1 * q3 < 0.0 && q5 * q5 - 4.0 * q3 * q4 < 0.0;
        let expr46 = q1 * q5 * q5 + q4 * q2 * q2 - 4.0 * q1 * q3 * q4;
        let ok46 = expr46 < 0.0;
        let eig = sym3_eigenvalues(u_abs * q1, q3 / u_abs, u_abs * q4, 0.5 * q2, 0.0, 0.5 * q5);
        QRow {
            q: [q1, q2, q3, q4, q5],
            b,
            s,
            ok44,
            ok45,
            ok46,
            expr46,
            min_eig: eig[2],
        }
    });

    let n = rows.len();
    let mut rep = QFormReport {
        x1: nodes,
        q1: Vec::with_capacity(n),
        q2: Vec::with_capacity(n),
        q3: Vec::with_capacity(n),
        q4: Vec::with_capacity(n),
        q5: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        flags44: Vec::with_capacity(n),
        flags45: Vec::with_capacity(n),
        flags46: Vec::with_capacity(n),
        expr46: Vec::with_capacity(n),
        min_eig: Vec::with_capacity(n),
        min_scaled_eig: f64::INFINITY,
        margin46: f64::INFINITY,
        lambda0: solve_lambda0(g)?,
    };
    for row in rows {
        rep.q1.push(row.q[0]);
        rep.q2.push(row.q[1]);
        rep.q3.push(row.q[2]);
        rep.q4.push(row.q[3]);
        rep.q5.push(row.q[4]);
        rep.b.push(row.b);
        rep.s.push(row.s);
        rep.flags44.push(row.ok44);
        rep.flags45.push(row.ok45);
        rep.flags46.push(row.ok46);
        rep.expr46.push(row.expr46);
        rep.min_eig.push(row.min_eig);
        rep.min_scaled_eig = rep.min_scaled_eig.min(row.min_eig * row.b * row.b);
        rep.margin46 = rep.margin46.min(-row.expr46 * row.b * row.b);
    }
    Ok(rep)
}

/// Export a quadratic-form report as CSV:
/// `x1,q1,q2,q3,q4,q5,B,S,min_eig_scaled,ok44,ok45,ok46`.
pub fn write_qform_csv<W: Write>(rep: &QFormReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "x1,q1,q2,q3,q4,q5,B,S,min_eig_scaled,ok44,ok45,ok46")?;
    for j in 0..rep.x1.len() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            rep.x1[j],
            rep.q1[j],
            rep.q2[j],
            rep.q3[j],
            rep.q4[j],
            rep.q5[j],
            rep.b[j],
            rep.s[j],
            rep.min_eig[j] * rep.b[j] * rep.b[j],
            rep.flags44[j],
            rep.flags45[j],
            rep.flags46[j],
        )?;
    }
    Ok(())
}
