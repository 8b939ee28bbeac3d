//! Small numerical kernels shared across the crate: bracketed root finding,
//! adaptive Gauss-Legendre quadrature, tridiagonal solves, nonuniform finite
//! difference weights, line fits, and a closed-form symmetric 3x3 eigensolver.

use crate::error::{Error, Result};

/// 16-point Gauss-Legendre abscissas on [-1, 1] (positive half).
const GL16_X: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];

/// 16-point Gauss-Legendre weights matching `GL16_X`.
const GL16_W: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

/// One 16-point Gauss-Legendre panel over [a, b].
pub fn gauss16<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..8 {
        let dx = half * GL16_X[k];
        acc += GL16_W[k] * (f(mid + dx) + f(mid - dx));
    }
    acc * half
}

/// Adaptive composite Gauss-Legendre quadrature with interval halving,
/// to absolute tolerance `abs_tol`. Returns 0 exactly for an empty interval.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let mid = 0.5 * (a + b);
        let left = gauss16(f, a, mid);
        let right = gauss16(f, mid, b);
        let split = left + right;
        if (split - whole).abs() <= tol || depth >= 28 {
            return split;
        }
        recurse(f, a, mid, left, 0.5 * tol, depth + 1)
            + recurse(f, mid, b, right, 0.5 * tol, depth + 1)
    }
    let whole = gauss16(f, a, b);
    recurse(f, a, b, whole, abs_tol, 0)
}

/// Bisection on a bracket [lo, hi] with f(lo)·f(hi) <= 0, to absolute
/// tolerance `tol` on the abscissa.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    Error::require(
        flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum(),
        format!("bisect: [{lo}, {hi}] does not bracket a root (f = {flo}, {fhi})"),
    )?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration safeguarded by a maintained bracket: any step that leaves
/// the bracket, or fails to shrink it fast enough, falls back to bisection.
/// `f` must have opposite signs at `lo` and `hi`. Converges to relative
/// tolerance `rel_tol` on the abscissa.
pub fn newton_bracketed<F, D>(
    f: &F,
    df: &D,
    mut lo: f64,
    mut hi: f64,
    mut x: f64,
    rel_tol: f64,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    x = x.clamp(lo, hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let d = df(x);
        let step_ok = d != 0.0 && d.is_finite();
        let mut next = if step_ok { x - fx / d } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let scale = x.abs().max(next.abs()).max(1e-300);
        if (next - x).abs() <= rel_tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::InvalidInput(format!(
        "newton_bracketed stalled near x = {x}"
    )))
}

/// Solve a tridiagonal system in place (Thomas algorithm).
///
/// `sub[i]` multiplies x[i-1] in row i (sub[0] unused), `diag[i]` is the
/// diagonal, `sup[i]` multiplies x[i+1] (sup[n-1] unused). `rhs` is consumed
/// and returned as the solution.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    Error::require(
        sub.len() == n && sup.len() == n && rhs.len() == n && n > 0,
        "tridiagonal: inconsistent lengths",
    )?;
    let mut scratch = vec![0.0; n];
    let mut beta = diag[0];
    Error::require(beta != 0.0, "tridiagonal: zero pivot at row 0")?;
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        Error::require(
            beta != 0.0 && beta.is_finite(),
            format!("tridiagonal: zero pivot at row {i}"),
        )?;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

/// Ordinary least squares line fit y ≈ a + b·x. Returns (a, b, r²).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    Error::require(n == ys.len() && n >= 2, "fit_line: need >= 2 points")?;
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    Error::require(sxx > 0.0, "fit_line: degenerate abscissas")?;
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res = syy - b * sxy;
    let r2 = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok((a, b, r2))
}

/// Eigenvalues of a symmetric 3x3 matrix, descending, by the trigonometric
/// closed form. `m = [[a,d,e],[d,b,f],[e,f,c]]` passed as (a,b,c,d,e,f).
pub fn sym3_eigenvalues(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> [f64; 3] {
    let p1 = d * d + e * e + f * f;
    if p1 == 0.0 {
        let mut eig = [a, b, c];
        eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
        return eig;
    }
    let q = (a + b + c) / 3.0;
    let p2 = (a - q) * (a - q) + (b - q) * (b - q) + (c - q) * (c - q) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let (ba, bb, bc, bd, be, bf) = (
        (a - q) / p,
        (b - q) / p,
        (c - q) / p,
        d / p,
        e / p,
        f / p,
    );
    let detb = ba * (bb * bc - bf * bf) - bd * (bd * bc - bf * be) + be * (bd * bf - bb * be);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// minmod limiter of two slopes.
pub fn minmod(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a.min(b)
    } else if a < 0.0 && b < 0.0 {
        a.max(b)
    } else {
        0.0
    }
}

/// First derivative at the middle of three nodes with spacings h1 = b-a,
/// h2 = c-b; second order on any spacing.
pub fn d1_centered(fa: f64, fb: f64, fc: f64, h1: f64, h2: f64) -> f64 {
    (h1 * h1 * fc - h2 * h2 * fa - (h1 * h1 - h2 * h2) * fb) / (h1 * h2 * (h1 + h2))
}

/// Second derivative at the middle of three nodes (see `d1_centered`).
pub fn d2_centered(fa: f64, fb: f64, fc: f64, h1: f64, h2: f64) -> f64 {
    2.0 * (h2 * fa + h1 * fc - (h1 + h2) * fb) / (h1 * h2 * (h1 + h2))
}

/// One-sided first derivative at the left node of three (second order).
pub fn d1_left(fa: f64, fb: f64, fc: f64, h1: f64, h2: f64) -> f64 {
    let s = h1 + h2;
    -fa * (2.0 * h1 + h2) / (h1 * s) + fb * s / (h1 * h2) - fc * h1 / (h2 * s)
}

/// One-sided first derivative at the right node of three (second order).
pub fn d1_right(fa: f64, fb: f64, fc: f64, h1: f64, h2: f64) -> f64 {
    let s = h1 + h2;
    fa * h2 / (h1 * s) - fb * s / (h1 * h2) + fc * (h1 + 2.0 * h2) / (h2 * s)
}
