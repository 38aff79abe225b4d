//! Adaptive quadrature on a finite interval.
//!
//! Plain adaptive Simpson with Richardson error control. The integrands in
//! this crate are smooth after the `r = tan(s)` substitution, so a low-order
//! adaptive rule converges quickly and carries an honest error estimate.

use crate::error::{Error, Result};

/// Result of an adaptive integration: the value and an accumulated bound on
/// the absolute error.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
}

const MAX_DEPTH: u32 = 60;

/// Hard cap on integrand evaluations per pass. Smooth integrands converge
/// orders of magnitude below this; rough ones must fail in bounded time
/// instead of exhausting the 2^depth bisection tree.
const EVAL_BUDGET: i64 = 2_000_000;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol_abs` or relative
/// tolerance `tol_rel`, whichever is looser at the current scale.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol_abs: f64, tol_rel: f64) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
    }
    // First pass for a magnitude estimate, second pass against the combined
    // tolerance so the relative criterion has something to be relative to.
    let rough = adaptive(&f, a, b, tol_abs.max(1e-6), MAX_DEPTH / 2).0;
    let tol = tol_abs.max(tol_rel * rough.abs());
    let (value, error_bound, converged) = adaptive(&f, a, b, tol, MAX_DEPTH);
    if !converged || !value.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "estimate {error_bound:.3e} above tolerance {tol:.3e} on [{a}, {b}]"
        )));
    }
    Ok(QuadResult { value, error_bound })
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> (f64, f64, bool) {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut budget = EVAL_BUDGET;
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, &mut budget)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut i64,
) -> (f64, f64, bool) {
    if *budget <= 0 {
        return (whole, f64::INFINITY, false);
    }
    *budget -= 2;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = (left + right - whole) / 15.0;
    if err.abs() <= tol || (b - a) < f64::EPSILON * (a.abs() + b.abs()) {
        return (left + right + err, err.abs(), true);
    }
    if depth == 0 {
        return (left + right + err, err.abs(), false);
    }
    let (lv, le, lok) = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget);
    let (rv, re, rok) = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget);
    (lv + rv, le + re, lok && rok)
}

/// Integrate `f` over `[0, inf)` via the substitution `r = tan(s)`,
/// `dr = sec^2(s) ds`. The caller's integrand must decay fast enough for the
/// transformed integrand to stay bounded near `s = pi/2`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol_abs: f64, tol_rel: f64) -> Result<QuadResult> {
    // The f64 value of pi/2 sits strictly below the exact one, so cos stays
    // positive and tan finite at the endpoint; the clipped mass is O(1e-16)
    // even for integrands with a finite limit after the substitution.
    let end = std::f64::consts::FRAC_PI_2;
    integrate(
        |s| {
            let c = s.cos();
            let r = s.sin() / c;
            f(r) / (c * c)
        },
        0.0,
        end,
        tol_abs,
        tol_rel,
    )
}
