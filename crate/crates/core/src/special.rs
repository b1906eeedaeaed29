//! Gaussian functions, adaptive Simpson quadrature and bracketing root finders.

use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard Gaussian distribution function.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation for large `x`.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

/// Standard Gaussian density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of the standard Gaussian distribution function.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // 1 − p is exact here.
        return -norm_quantile(1.0 - p);
    }
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step against the full-precision distribution function.
    let d = norm_pdf(x);
    if d > 0.0 {
        x - (norm_cdf(x) - p) / d
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Accumulated error estimate from the Richardson correction terms.
    pub error: f64,
    /// False when some panel hit the depth limit before meeting its tolerance.
    pub converged: bool,
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, converged: true };
    }
    if b < a {
        let q = adaptive_simpson(f, b, a, tol);
        return Quadrature { value: -q.value, ..q };
    }
    // Seed with a handful of panels so narrow features are not skipped by the
    // first whole-interval estimate.
    const SEED_PANELS: usize = 8;
    let h = (b - a) / SEED_PANELS as f64;
    let mut total = Quadrature { value: 0.0, error: 0.0, converged: true };
    for i in 0..SEED_PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == SEED_PANELS { b } else { lo + h };
        let fa = f(lo);
        let fb = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        let part = simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / SEED_PANELS as f64, MAX_DEPTH);
        total.value += part.value;
        total.error += part.error;
        total.converged &= part.converged;
    }
    total
}

/// Integrates over consecutive panels separated by `breaks`, which must lie in `[a, b]`.
pub fn adaptive_simpson_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Quadrature {
    let mut points = Vec::with_capacity(breaks.len() + 2);
    points.push(a);
    points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    let panels = (points.len() - 1) as f64;
    let mut total = Quadrature { value: 0.0, error: 0.0, converged: true };
    for w in points.windows(2) {
        let q = adaptive_simpson(&f, w[0], w[1], tol / panels);
        total.value += q.value;
        total.error += q.error;
        total.converged &= q.converged;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Quadrature {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || m <= a || m >= b {
        return Quadrature { value: left + right + delta / 15.0, error: delta.abs() / 15.0, converged: false };
    }
    if delta.abs() <= 15.0 * tol {
        return Quadrature { value: left + right + delta / 15.0, error: delta.abs() / 15.0, converged: true };
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    Quadrature { value: l.value + r.value, error: l.error + r.error, converged: l.converged && r.converged }
}

/// Bisection for the smallest `x` in `[lo, hi]` with `pred(x)` true, assuming
/// `pred` is monotone (false then true). Stops at relative width `rel_tol`.
pub fn bisect_monotone<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    hi
}
