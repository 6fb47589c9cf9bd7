//! Scalar root finding and damped fixed-point iteration.
//!
//! Bisection is deliberately the only bracketing method used: every solver in
//! this crate evaluates cheap closed forms (or seeded Monte Carlo estimates,
//! which are deterministic functions), so robustness and reproducibility beat
//! superlinear convergence.

use crate::error::{EconError, Result};

/// Find a root of `f` in `[lo, hi]` by bisection.
///
/// Requires `f(lo)` and `f(hi)` to have opposite (or zero) signs. Iterates
/// until the bracket width is below `rel_tol * max(1, |mid|)` or `max_iter`
/// halvings, whichever comes first; the bracket shrinks by 2^-max_iter so a
/// generous `max_iter` (default callers use 200) always terminates.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: u32,
) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(EconError::domain(format!(
            "invalid bisection bracket [{lo}, {hi}]"
        )));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(EconError::NoRoot(format!(
            "no sign change on [{lo}, {hi}] (f(lo)={f_lo:.6e}, f(hi)={f_hi:.6e})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * mid.abs().max(1.0) {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    // The bracket midpoint is still the best estimate; report failure only if
    // the width says so.
    let mid = 0.5 * (lo + hi);
    if hi - lo <= rel_tol * mid.abs().max(1.0) {
        Ok(mid)
    } else {
        Err(EconError::NonConvergence(format!(
            "bisection bracket still [{lo}, {hi}] after {max_iter} iterations"
        )))
    }
}

/// Grow `hi` geometrically from `lo` until `f` changes sign, then return the
/// bracketing interval.
///
/// `f(lo)` fixes the reference sign. Fails with `NoRoot` after
/// `max_expansions` doublings.
pub fn expand_upper<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    first_hi: f64,
    max_expansions: u32,
) -> Result<(f64, f64)> {
    if !(first_hi > lo) {
        return Err(EconError::domain(format!(
            "bracket expansion needs first_hi > lo (got lo={lo}, first_hi={first_hi})"
        )));
    }
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok((lo, lo));
    }
    let mut prev = lo;
    let mut hi = first_hi;
    for _ in 0..max_expansions {
        let f_hi = f(hi);
        if f_hi == 0.0 || f_hi.signum() != f_lo.signum() {
            return Ok((prev, hi));
        }
        prev = hi;
        hi *= 2.0;
    }
    Err(EconError::NoRoot(format!(
        "no sign change up to {hi} after {max_expansions} doublings from {lo}"
    )))
}

/// Damped fixed-point iteration `x <- x + damping * (g(x) - x)`.
///
/// Converges when `|g(x) - x| <= tol * max(1, |x|)`; errors with
/// `NonConvergence` after `max_iter` steps.
pub fn fixed_point<G: FnMut(f64) -> f64>(
    mut g: G,
    x0: f64,
    damping: f64,
    tol: f64,
    max_iter: u32,
) -> Result<f64> {
    let mut x = x0;
    for _ in 0..max_iter {
        let gx = g(x);
        if !gx.is_finite() {
            return Err(EconError::NonConvergence(format!(
                "fixed-point map produced {gx} at x={x}"
            )));
        }
        let step = gx - x;
        if step.abs() <= tol * x.abs().max(1.0) {
            return Ok(x + step);
        }
        x += damping * step;
    }
    Err(EconError::NonConvergence(format!(
        "fixed point not reached after {max_iter} iterations (x={x})"
    )))
}
