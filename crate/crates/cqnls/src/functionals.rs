//! Conserved quantities and diagnostic functionals.
//!
//! Energy splits as `E(u) = E^c(u) + (1/4)||u||_L4^4` with the critical part
//! `E^c(u) = (1/2)||grad u||^2 - (1/6)||u||_L6^6`. All integrals use the same
//! trapezoid quadrature so the splitting identity holds to rounding.

use crate::ground_state::GroundStateRef;
use crate::grid::{integrate_radial, radial_derivative, RadialField};

/// `(1/2) ||u||_L2^2`, computed in the `v = r*u` variable:
/// `2 pi dr sum_j |r_j u_j|^2`. This is exactly the quantity the sine-basis
/// propagator conserves.
pub fn mass(u: &RadialField) -> f64 {
    let mut acc = 0.0;
    for (&z, &r) in u.values().iter().zip(u.grid().nodes()) {
        acc += z.norm_sqr() * r * r;
    }
    2.0 * std::f64::consts::PI * u.grid().dr() * acc
}

/// `||grad u||_L2^2` via the fourth-order radial derivative.
pub fn grad_norm_sq(u: &RadialField) -> f64 {
    let du = radial_derivative(u);
    let dens: Vec<f64> = du.values().iter().map(|z| z.norm_sqr()).collect();
    integrate_radial(u.grid(), &dens)
}

/// `||u||_L4^4`.
pub fn l4_norm_4(u: &RadialField) -> f64 {
    let dens: Vec<f64> = u.values().iter().map(|z| z.norm_sqr().powi(2)).collect();
    integrate_radial(u.grid(), &dens)
}

/// `||u||_L6^6`.
pub fn l6_norm_6(u: &RadialField) -> f64 {
    let dens: Vec<f64> = u.values().iter().map(|z| z.norm_sqr().powi(3)).collect();
    integrate_radial(u.grid(), &dens)
}

/// Full energy `(1/2)||grad u||^2 - (1/6)||u||_L6^6 + (1/4)||u||_L4^4`.
pub fn energy(u: &RadialField) -> f64 {
    0.5 * grad_norm_sq(u) - l6_norm_6(u) / 6.0 + l4_norm_4(u) / 4.0
}

/// Critical energy `E^c(u) = E(u) - (1/4)||u||_L4^4`.
pub fn critical_energy(u: &RadialField) -> f64 {
    0.5 * grad_norm_sq(u) - l6_norm_6(u) / 6.0
}

/// Gradient-norm distance to the orbit, `| ||grad W||^2 - ||grad u||^2 |`.
pub fn delta(u: &RadialField, reference: &GroundStateRef) -> f64 {
    (reference.grad_norm_sq - grad_norm_sq(u)).abs()
}

/// `G(u) = ||grad u||^2 - ||u||_L6^6`; positive on every below-threshold
/// state by the sharp Sobolev inequality chain.
pub fn g_functional(u: &RadialField) -> f64 {
    grad_norm_sq(u) - l6_norm_6(u)
}

/// `||u||_L6 / (C_GN ||grad u||_L2)`: equals 1 on the ground-state orbit,
/// strictly below 1 elsewhere. Zero field is reported as an error by giving
/// back `None`.
pub fn sobolev_ratio(u: &RadialField, reference: &GroundStateRef) -> Option<f64> {
    let g = grad_norm_sq(u);
    if g == 0.0 {
        return None;
    }
    Some(l6_norm_6(u).powf(1.0 / 6.0) / (reference.c_gn * g.sqrt()))
}

/// Report-only radial Sobolev check: the far-field amplitude
/// `max_{r_j >= R} |u_j|` against the bound `(1/R) ||u||^{1/2} ||grad u||^{1/2}`
/// (with `||u||^2` the plain L2 integral, i.e. twice the mass).
pub fn radial_sobolev_check(u: &RadialField, r_cut: f64) -> (f64, f64) {
    let lhs = u
        .values()
        .iter()
        .zip(u.grid().nodes())
        .filter(|(_, &r)| r >= r_cut)
        .map(|(z, _)| z.norm())
        .fold(0.0, f64::max);
    let l2_sq = 2.0 * mass(u);
    let rhs = (l2_sq.sqrt() * grad_norm_sq(u).sqrt()).sqrt() / r_cut;
    (lhs, rhs)
}

/// One diagnostics row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub crit_energy: f64,
    pub grad_norm_sq: f64,
    pub l4_norm_4: f64,
    pub l6_norm_6: f64,
    pub delta: f64,
    pub g_functional: f64,
    pub below_threshold: bool,
}

impl DiagnosticsRecord {
    /// Measure all functionals of `u` at time `t`.
    pub fn measure(t: f64, u: &RadialField, reference: &GroundStateRef) -> Self {
        let grad = grad_norm_sq(u);
        let l4 = l4_norm_4(u);
        let l6 = l6_norm_6(u);
        let crit = 0.5 * grad - l6 / 6.0;
        DiagnosticsRecord {
            t,
            mass: mass(u),
            energy: crit + 0.25 * l4,
            crit_energy: crit,
            grad_norm_sq: grad,
            l4_norm_4: l4,
            l6_norm_6: l6,
            delta: (reference.grad_norm_sq - grad).abs(),
            g_functional: grad - l6,
            below_threshold: grad < reference.grad_norm_sq,
        }
    }

    /// Fixed CSV column order.
    pub const CSV_HEADER: &'static str =
        "t,mass,energy,crit_energy,grad_norm_sq,l4_norm_4,l6_norm_6,delta,g_functional,below_threshold";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            self.t,
            self.mass,
            self.energy,
            self.crit_energy,
            self.grad_norm_sq,
            self.l4_norm_4,
            self.l6_norm_6,
            self.delta,
            self.g_functional,
            self.below_threshold
        )
    }

    /// Parse a row written by [`DiagnosticsRecord::to_csv_row`].
    pub fn from_csv_row(row: &str) -> Option<Self> {
        let mut it = row.trim().split(',');
        let mut next = || it.next()?.parse::<f64>().ok();
        let t = next()?;
        let mass = next()?;
        let energy = next()?;
        let crit_energy = next()?;
        let grad_norm_sq = next()?;
        let l4_norm_4 = next()?;
        let l6_norm_6 = next()?;
        let delta = next()?;
        let g_functional = next()?;
        let below_threshold = it.next()?.trim() == "true";
        Some(DiagnosticsRecord {
            t,
            mass,
            energy,
            crit_energy,
            grad_norm_sq,
            l4_norm_4,
            l6_norm_6,
            delta,
            g_functional,
            below_threshold,
        })
    }
}
