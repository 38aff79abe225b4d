//! The radial ground state `W(r) = (1 + r^2/3)^(-1/2)` of `-ΔW = W^5`, its
//! scaling-family derivatives, and high-accuracy reference constants.
//!
//! `W` has a slowly decaying tail `W ~ sqrt(3)/r`: it belongs to the
//! homogeneous Sobolev space but not to L2, so truncated masses grow without
//! bound, and any finite computational box misses `12*pi/r_max` of the
//! squared gradient norm (`12*pi/(mu*r_max)` for the `mu`-rescaled state).

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{RadialField, RadialGrid};
use crate::quad;

/// `W(r) = (1 + r^2/3)^(-1/2)`.
pub fn eval_w(r: f64) -> f64 {
    1.0 / (1.0 + r * r / 3.0).sqrt()
}

/// `W'(r) = -(r/3) (1 + r^2/3)^(-3/2)`.
pub fn eval_w_prime(r: f64) -> f64 {
    let b = 1.0 + r * r / 3.0;
    -(r / 3.0) / (b * b * b).sqrt()
}

/// First scaling derivative `W1 = d/dmu |_{mu=1} mu^(1/2) W(mu r)
/// = W/2 + r W' = (1 + r^2/3)^(-3/2) (1/2 - r^2/6)`.
pub fn eval_w1(r: f64) -> f64 {
    let b = 1.0 + r * r / 3.0;
    (0.5 - r * r / 6.0) / (b * b * b).sqrt()
}

/// `W1'(r) = (1 + r^2/3)^(-5/2) (-(5/6) r + r^3/18)`.
pub fn eval_w1_prime(r: f64) -> f64 {
    let b = 1.0 + r * r / 3.0;
    (-(5.0 / 6.0) * r + r * r * r / 18.0) / (b * b * b * b * b).sqrt()
}

/// Second scaling derivative `W2 = W1/2 + r W1'
/// = (1 + r^2/3)^(-5/2) (1/4 - (5/6) r^2 + r^4/36)`.
pub fn eval_w2(r: f64) -> f64 {
    let b = 1.0 + r * r / 3.0;
    (0.25 - (5.0 / 6.0) * r * r + r * r * r * r / 36.0) / (b * b * b * b * b).sqrt()
}

/// `W2'(r) = (1 + r^2/3)^(-7/2) (-(25/12) r + (17/18) r^3 - r^5/108)`.
pub fn eval_w2_prime(r: f64) -> f64 {
    let b = 1.0 + r * r / 3.0;
    let r2 = r * r;
    r * (-25.0 / 12.0 + (17.0 / 18.0) * r2 - r2 * r2 / 108.0) / (b * b * b * b * b * b * b).sqrt()
}

/// Sample the modulated orbit state `e^{i theta} mu^{1/2} W(mu r)`.
pub fn scaled_state(theta: f64, mu: f64, grid: &RadialGrid) -> RadialField {
    let phase = Complex64::cis(theta) * mu.sqrt();
    RadialField::from_fn(grid, |r| phase * eval_w(mu * r))
}

/// Squared-gradient mass lost beyond `r_max` for `mu^(1/2) W(mu r)`:
/// `int_{r_max}^inf |W_mu'|^2 4 pi r^2 dr ~ 12 pi/(mu r_max)`.
pub fn grad_tail_correction(mu: f64, r_max: f64) -> f64 {
    12.0 * std::f64::consts::PI / (mu * r_max)
}

/// Exact squared-gradient tail of the scaled state beyond `r_cut`:
/// `int_{r_cut}^inf mu^3 |W'(mu r)|^2 4 pi r^2 dr`, in closed form. At
/// `r_cut = 0` this is the full integral `3 sqrt(3) pi^2 / 4`; for large
/// arguments it reduces to `grad_tail_correction`.
pub fn scaled_grad_tail(mu: f64, r_cut: f64) -> f64 {
    let x = mu * r_cut;
    let d = x * x + 3.0;
    let atan = (3.0_f64.sqrt() / x).atan();
    let four_pi = 4.0 * std::f64::consts::PI;
    four_pi * 0.375 * (3.0_f64.sqrt() * atan + (5.0 * x * x * x + 9.0 * x) / (d * d))
}

/// Exact `L^6` tail of the scaled state beyond `r_cut`:
/// `int_{r_cut}^inf mu^3 W(mu r)^6 4 pi r^2 dr`, in closed form.
pub fn scaled_l6_tail(mu: f64, r_cut: f64) -> f64 {
    let x = mu * r_cut;
    let d = x * x + 3.0;
    let atan = (3.0_f64.sqrt() / x).atan();
    let four_pi = 4.0 * std::f64::consts::PI;
    four_pi * 0.375 * (3.0_f64.sqrt() * atan + (9.0 * x - 3.0 * x * x * x) / (d * d))
}

/// Truncated mass `2 pi int_0^R W^2 r^2 dr`, by adaptive quadrature.
pub fn truncated_mass(r_cut: f64) -> Result<f64> {
    let q = quad::integrate(|r| eval_w(r).powi(2) * r * r, 0.0, r_cut, 1e-9, 1e-12)?;
    Ok(2.0 * std::f64::consts::PI * q.value)
}

/// Reference constants of the ground state, all computed by adaptive
/// quadrature over the half line (substitution `r = tan s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateRef {
    /// `||grad W||_L2^2 = 3 sqrt(3) pi^2 / 4`.
    pub grad_norm_sq: f64,
    /// `||W||_L6^6`, equal to the squared gradient norm (Pohozaev).
    pub l6_norm_6: f64,
    /// Critical energy `E^c(W) = grad_norm_sq / 3`.
    pub crit_energy: f64,
    /// Sharp Sobolev constant `||W||_L6 / ||grad W||_L2 = grad_norm_sq^(-1/3)`.
    pub c_gn: f64,
    /// Accumulated absolute quadrature error bound.
    pub quadrature_error_bound: f64,
}

/// Compute the reference constants to quadrature accuracy (relative error
/// bound at most 1e-10).
pub fn reference_constants() -> Result<GroundStateRef> {
    let g = quad::integrate_half_line(|r| eval_w_prime(r).powi(2) * r * r, 1e-13, 1e-13)?;
    let l6 = quad::integrate_half_line(|r| eval_w(r).powi(6) * r * r, 1e-13, 1e-13)?;
    let four_pi = 4.0 * std::f64::consts::PI;
    let grad_norm_sq = four_pi * g.value;
    let l6_norm_6 = four_pi * l6.value;
    let err = four_pi * (g.error_bound + l6.error_bound);
    Ok(GroundStateRef {
        grad_norm_sq,
        l6_norm_6,
        crit_energy: 0.5 * grad_norm_sq - l6_norm_6 / 6.0,
        c_gn: l6_norm_6.powf(1.0 / 6.0) / grad_norm_sq.sqrt(),
        quadrature_error_bound: err,
    })
}
