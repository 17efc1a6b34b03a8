//! One-dimensional root finding and minimisation.

use crate::error::{Error, Result};

/// Root of `f` on `[lo, hi]` by bisection. The endpoints must bracket a sign
/// change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::FitFailure("objective is not finite at the bracket".into()));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::FitFailure(format!("[{lo}, {hi}] does not bracket a root")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let fm = f(mid);
        if !fm.is_finite() {
            return Err(Error::FitFailure(format!("objective is not finite at {mid}")));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum of a unimodal `f` on `[lo, hi]` by golden-section search.
/// Returns `(argmin, f(argmin))`.
pub fn golden_section_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) {
        return Err(Error::FitFailure(format!("empty search interval [{lo}, {hi}]")));
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        if !(fa.is_finite() || fb.is_finite()) {
            return Err(Error::FitFailure("objective is not finite".into()));
        }
        if fa <= fb || fb.is_nan() {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    if !fx.is_finite() {
        return Err(Error::FitFailure(format!("objective is not finite at {x}")));
    }
    Ok((x, fx))
}
