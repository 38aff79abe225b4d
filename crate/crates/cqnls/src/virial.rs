//! Localized virial weight and the virial functionals.
//!
//! The weight is `w_R(x) = R^2 phi(|x|/R)` with `phi(s) = s^2` for `s <= 1`
//! and a polynomial transition on `[1, 2]`. Three constraints shape the
//! transition:
//!
//! * the junctions must be at least C3, since a jump in `phi'''` would put a
//!   delta function into `Delta^2 w_R` that grid quadrature cannot see;
//! * the blowup machinery needs the one-sided bound `phi'' <= 2` everywhere;
//! * `F_R` integrates `Delta^2 w_R |u|^2` by a plain Riemann sum, so any
//!   low-order derivative jump at the junctions costs quadrature accuracy.
//!   The adopted transition is C6 at both ends, which keeps that term three
//!   orders of magnitude below the tightest tolerance used by the test
//!   batteries.
//!
//! Interpolating all the way down to `phi(2) = 0` makes the `phi'' <= 2`
//! bound unattainable (integrating `phi''` against `1` and `(2 - s)` over
//! the transition forces excess curvature mass toward `s = 1`), so the
//! transition instead levels off to a constant plateau for `s >= 2`. Every
//! functional below involves only derivatives of `w_R`, so the plateau value
//! never enters any number.
//!
//! Construction tries the hard-zero Hermite candidate first, then falls back
//! to the plateau family, searching its free coefficient to minimize
//! `sup phi''`; both candidates are verified numerically on a dense sample.

use crate::error::{Error, Result};
use crate::functionals::{g_functional, l4_norm_4};
use crate::grid::{integrate_radial, radial_derivative, RadialField, RadialGrid};
use crate::ground_state::{scaled_grad_tail, scaled_l6_tail, scaled_state};

const NCOEF: usize = 15;

/// Transition polynomial in `t = s - 1` for the hard-zero Hermite candidate:
/// `(phi, phi', phi'', phi''') = (1,2,2,0)` at `s=1` and `(0,0,0,0)` at `s=2`.
const HARD_ZERO_CANDIDATE: [f64; NCOEF] = [
    1.0, 2.0, 1.0, 0.0, -85.0, 194.0, -157.0, 44.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
];

/// Plateau family base: the unique degree-12 polynomial matching
/// `(1, 2, 2, 0, 0, 0, 0)` at `s=1` (value and six derivatives of `s^2`)
/// and `phi^(k) = 0` for `k = 1..6` at `s=2`.
const PLATEAU_BASE: [f64; NCOEF] = [
    1.0,
    2.0,
    1.0,
    0.0,
    0.0,
    0.0,
    0.0,
    -204.0,
    1515.0 / 2.0,
    -1170.0,
    931.0,
    -4172.0 / 11.0,
    63.0,
    0.0,
    0.0,
];

/// Direction spanning the one-parameter plateau family: `t^7 (1 - t)^7`,
/// which has zero data through the sixth derivative at both junctions.
const PLATEAU_FREE: [f64; NCOEF] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, -7.0, 21.0, -35.0, 35.0, -21.0, 7.0, -1.0,
];

const SAMPLE_POINTS: usize = 10_000;
const SUP_TOL: f64 = 2.0 + 1e-12;

fn poly_eval(c: &[f64; NCOEF], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

fn poly_derivative(c: &[f64; NCOEF]) -> [f64; NCOEF] {
    let mut d = [0.0; NCOEF];
    for k in 1..NCOEF {
        d[k - 1] = k as f64 * c[k];
    }
    d
}

/// Localized virial weight with exact piecewise-polynomial derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct VirialWeight {
    r_scale: f64,
    /// Transition coefficients in `t = s - 1` on `[1, 2]`.
    coeffs: [f64; NCOEF],
    d1: [f64; NCOEF],
    d2: [f64; NCOEF],
    d3: [f64; NCOEF],
    d4: [f64; NCOEF],
    /// `phi(s)` for `s >= 2`.
    plateau: f64,
    /// Recorded constant of the derivative-decay bound
    /// `|phi^(a)(s)| <= C s^(2-a)`, `a <= 4`.
    pub decay_constant: f64,
}

impl VirialWeight {
    pub fn r_scale(&self) -> f64 {
        self.r_scale
    }

    /// Transition-polynomial coefficients in `t = s - 1`.
    pub fn transition_coeffs(&self) -> &[f64; NCOEF] {
        &self.coeffs
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    pub fn phi(&self, s: f64) -> f64 {
        if s <= 1.0 {
            s * s
        } else if s >= 2.0 {
            self.plateau
        } else {
            poly_eval(&self.coeffs, s - 1.0)
        }
    }

    pub fn phi_p(&self, s: f64) -> f64 {
        if s <= 1.0 {
            2.0 * s
        } else if s >= 2.0 {
            0.0
        } else {
            poly_eval(&self.d1, s - 1.0)
        }
    }

    pub fn phi_pp(&self, s: f64) -> f64 {
        if s <= 1.0 {
            2.0
        } else if s >= 2.0 {
            0.0
        } else {
            poly_eval(&self.d2, s - 1.0)
        }
    }

    pub fn phi_ppp(&self, s: f64) -> f64 {
        if !(1.0..2.0).contains(&s) {
            0.0
        } else {
            poly_eval(&self.d3, s - 1.0)
        }
    }

    pub fn phi_pppp(&self, s: f64) -> f64 {
        if !(1.0..2.0).contains(&s) {
            0.0
        } else {
            poly_eval(&self.d4, s - 1.0)
        }
    }

    /// `w_R'(r) = R phi'(r/R)`.
    pub fn w_prime(&self, r: f64) -> f64 {
        self.r_scale * self.phi_p(r / self.r_scale)
    }

    /// `w_R''(r) = phi''(r/R)`.
    pub fn w_pp(&self, r: f64) -> f64 {
        self.phi_pp(r / self.r_scale)
    }

    /// `Delta w_R = phi''(s) + 2 phi'(s)/s`; equals 6 on the inner region.
    pub fn laplacian_w(&self, r: f64) -> f64 {
        let s = r / self.r_scale;
        if s <= 1.0 {
            6.0
        } else if s >= 2.0 {
            0.0
        } else {
            self.phi_pp(s) + 2.0 * self.phi_p(s) / s
        }
    }

    /// `Delta^2 w_R = (phi''''(s) + 4 phi'''(s)/s)/R^2`; vanishes off the
    /// transition shell.
    pub fn bilaplacian_w(&self, r: f64) -> f64 {
        let s = r / self.r_scale;
        if !(1.0..2.0).contains(&s) {
            0.0
        } else {
            (self.phi_pppp(s) + 4.0 * self.phi_ppp(s) / s) / (self.r_scale * self.r_scale)
        }
    }
}

fn assemble(r_scale: f64, coeffs: [f64; NCOEF], plateau: f64) -> VirialWeight {
    let d1 = poly_derivative(&coeffs);
    let d2 = poly_derivative(&d1);
    let d3 = poly_derivative(&d2);
    let d4 = poly_derivative(&d3);
    VirialWeight {
        r_scale,
        coeffs,
        d1,
        d2,
        d3,
        d4,
        plateau,
        decay_constant: 0.0,
    }
}

/// Numerical verification of the weight invariants on a dense sample.
/// Returns the recorded decay constant on success.
fn verify_weight(w: &VirialWeight) -> Result<f64> {
    // Junction continuity of phi .. phi''' at s = 1 and s = 2.
    let junctions = [
        (1.0, poly_eval(&w.coeffs, 0.0)),
        (2.0, poly_eval(&w.d1, 0.0)),
        (2.0, poly_eval(&w.d2, 0.0)),
        (0.0, poly_eval(&w.d3, 0.0)),
        (w.plateau, poly_eval(&w.coeffs, 1.0)),
        (0.0, poly_eval(&w.d1, 1.0)),
        (0.0, poly_eval(&w.d2, 1.0)),
        (0.0, poly_eval(&w.d3, 1.0)),
    ];
    for (i, (outer, inner)) in junctions.iter().enumerate() {
        if (outer - inner).abs() > 1e-9 {
            return Err(Error::WeightConstruction(format!(
                "junction mismatch in derivative {} ({} vs {})",
                i % 4,
                outer,
                inner
            )));
        }
    }
    let mut sup_pp = f64::NEG_INFINITY;
    let mut decay = 0.0_f64;
    for i in 0..=SAMPLE_POINTS {
        let s = 3.0 * i as f64 / SAMPLE_POINTS as f64;
        sup_pp = sup_pp.max(w.phi_pp(s));
        if s > 0.0 {
            for (a, v) in [
                (0, w.phi(s)),
                (1, w.phi_p(s)),
                (2, w.phi_pp(s)),
                (3, w.phi_ppp(s)),
                (4, w.phi_pppp(s)),
            ] {
                decay = decay.max(v.abs() / s.powi(2 - a));
            }
        }
    }
    if sup_pp > SUP_TOL {
        return Err(Error::WeightConstruction(format!(
            "sup phi'' = {sup_pp:.6} exceeds 2"
        )));
    }
    if !decay.is_finite() {
        return Err(Error::WeightConstruction(
            "derivative-decay constant diverged".into(),
        ));
    }
    Ok(decay)
}

fn sampled_sup_pp(coeffs: &[f64; NCOEF]) -> f64 {
    let d2 = poly_derivative(&poly_derivative(coeffs));
    let mut sup = f64::NEG_INFINITY;
    for i in 0..=SAMPLE_POINTS {
        let t = i as f64 / SAMPLE_POINTS as f64;
        sup = sup.max(poly_eval(&d2, t));
    }
    sup
}

/// Build the virial weight at scale `R >= 1`.
///
/// Tries the hard-zero Hermite candidate first; when its verification fails
/// (it always does: that candidate peaks at `sup phi'' ~ 13.4`), falls back
/// to the plateau family and 1-D-searches the free coefficient minimizing
/// the sampled `sup phi''`, with ties resolved toward the base member. The
/// winning weight is re-verified; failure of both candidates is a hard
/// error.
pub fn build_weight(r_scale: f64) -> Result<VirialWeight> {
    if !(r_scale.is_finite() && r_scale >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "weight scale must be >= 1, got {r_scale}"
        )));
    }
    let hard_zero = assemble(r_scale, HARD_ZERO_CANDIDATE, 0.0);
    if let Ok(decay) = verify_weight(&hard_zero) {
        return Ok(VirialWeight {
            decay_constant: decay,
            ..hard_zero
        });
    }

    // Plateau fallback: coeffs(g) = PLATEAU_BASE + g * PLATEAU_FREE. Scan a
    // symmetric grid ordered by |g| so ties resolve to the smallest |g|.
    let coeffs_for = |g: f64| {
        let mut c = PLATEAU_BASE;
        for (ck, fk) in c.iter_mut().zip(PLATEAU_FREE.iter()) {
            *ck += g * fk;
        }
        c
    };
    let mut best_g = 0.0;
    let mut best_sup = sampled_sup_pp(&coeffs_for(0.0));
    for i in 1..=400 {
        for sign in [1.0, -1.0] {
            let g = sign * i as f64 * 0.25;
            let sup = sampled_sup_pp(&coeffs_for(g));
            if sup < best_sup - 1e-13 {
                best_sup = sup;
                best_g = g;
            }
        }
    }
    let coeffs = coeffs_for(best_g);
    let plateau = poly_eval(&coeffs, 1.0);
    let w = assemble(r_scale, coeffs, plateau);
    let decay = verify_weight(&w)?;
    Ok(VirialWeight {
        decay_constant: decay,
        ..w
    })
}

/// Test hook: assemble a weight from raw transition coefficients and run the
/// full invariant verification on it.
#[doc(hidden)]
pub fn build_weight_from_coeffs(
    r_scale: f64,
    coeffs: [f64; NCOEF],
    plateau: f64,
) -> Result<VirialWeight> {
    let w = assemble(r_scale, coeffs, plateau);
    let decay = verify_weight(&w)?;
    Ok(VirialWeight {
        decay_constant: decay,
        ..w
    })
}

// ---------------------------------------------------------------------------
// Functionals.

/// Localized virial `I_R(u) = 2 Im int grad(w_R) . grad(u) conj(u) dx`.
pub fn i_r(u: &RadialField, w: &VirialWeight) -> f64 {
    let du = radial_derivative(u);
    let dens: Vec<f64> = du
        .values()
        .iter()
        .zip(u.values())
        .zip(u.grid().nodes())
        .map(|((&dj, &uj), &r)| 2.0 * w.w_prime(r) * (dj * uj.conj()).im)
        .collect();
    integrate_radial(u.grid(), &dens)
}

/// `F_R(u) = int { (-Delta^2 w_R)|u|^2 + Delta(w_R)|u|^4 + 4 w_R''|u_r|^2 }
/// - (4/3) int Delta(w_R)|u|^6`, the time derivative of `I_R` along the
/// flow.
pub fn f_r(u: &RadialField, w: &VirialWeight) -> f64 {
    let du = radial_derivative(u);
    let dens: Vec<f64> = du
        .values()
        .iter()
        .zip(u.values())
        .zip(u.grid().nodes())
        .map(|((&dj, &uj), &r)| {
            let a2 = uj.norm_sqr();
            let lap = w.laplacian_w(r);
            -w.bilaplacian_w(r) * a2 + lap * a2 * a2 + 4.0 * w.w_pp(r) * dj.norm_sqr()
                - 4.0 / 3.0 * lap * a2 * a2 * a2
        })
        .collect();
    integrate_radial(u.grid(), &dens)
}

/// Critical part `F^c_R(u) = F_R(u) - int Delta(w_R)|u|^4`.
pub fn fc_r(u: &RadialField, w: &VirialWeight) -> f64 {
    let dens: Vec<f64> = u
        .values()
        .iter()
        .zip(u.grid().nodes())
        .map(|(&uj, &r)| {
            let a2 = uj.norm_sqr();
            w.laplacian_w(r) * a2 * a2
        })
        .collect();
    f_r(u, w) - integrate_radial(u.grid(), &dens)
}

/// Unlocalized limit `F^c_inf(u) = 8 G(u) = 8(||grad u||^2 - ||u||_L6^6)`.
pub fn fc_inf(u: &RadialField) -> f64 {
    8.0 * g_functional(u)
}

/// Unlocalized full virial `F_inf(u) = 8||grad u||^2 - 8||u||_L6^6 + 6||u||_L4^4`.
pub fn f_inf(u: &RadialField) -> f64 {
    fc_inf(u) + 6.0 * l4_norm_4(u)
}

/// Modulated localization correction: `F^c_R - F^c_inf` on the orbit state
/// `e^{i theta} mu^{1/2} W(mu r)`. Both terms vanish in exact arithmetic.
/// `F^c_R` has compactly supported integrands, but `F^c_inf` integrates over
/// all of space, so its grid value is completed with the closed-form tails
/// of the profile beyond `r_max`; the result then measures pure
/// discretization error.
pub fn k_correction(theta: f64, mu: f64, w: &VirialWeight, grid: &RadialGrid) -> f64 {
    let s = scaled_state(theta, mu, grid);
    let tail = 8.0 * (scaled_grad_tail(mu, grid.r_max()) - scaled_l6_tail(mu, grid.r_max()));
    fc_r(&s, w) - (fc_inf(&s) + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn inner_region_is_exact_square() {
        let w = build_weight(4.0).unwrap();
        assert_eq!(w.phi(0.5), 0.25);
        assert_eq!(w.phi_p(0.5), 1.0);
        assert_eq!(w.phi_pp(0.5), 2.0);
        assert_eq!(w.laplacian_w(0.5 * 4.0), 6.0);
        assert_eq!(w.bilaplacian_w(0.5 * 4.0), 0.0);
    }

    #[test]
    fn outer_region_derivatives_vanish() {
        let w = build_weight(2.0).unwrap();
        for s in [2.0, 2.5, 10.0] {
            assert_eq!(w.phi_p(s), 0.0);
            assert_eq!(w.phi_pp(s), 0.0);
            assert_eq!(w.laplacian_w(s * 2.0), 0.0);
            assert_eq!(w.bilaplacian_w(s * 2.0), 0.0);
        }
        // The transition levels off to the exact rational plateau 49/22.
        assert!((w.plateau() - 49.0 / 22.0).abs() < 1e-12);
        assert_eq!(w.phi(3.0), w.plateau());
    }

    #[test]
    fn second_derivative_bound_holds() {
        let w = build_weight(1.0).unwrap();
        let mut sup: f64 = f64::NEG_INFINITY;
        for i in 0..=20_000 {
            let s = 2.5 * i as f64 / 20_000.0;
            sup = sup.max(w.phi_pp(s));
        }
        assert!(sup <= 2.0 + 1e-12, "sup phi'' = {sup}");
        assert!(w.decay_constant.is_finite() && w.decay_constant > 0.0);
    }

    #[test]
    fn junctions_are_smooth_to_sixth_order() {
        let w = build_weight(1.0).unwrap();
        let mut d = *w.transition_coeffs();
        for k in 1..=6 {
            d = poly_derivative(&d);
            let inner_at_1 = if k <= 2 { 2.0 } else { 0.0 };
            assert!(
                (poly_eval(&d, 0.0) - inner_at_1).abs() < 1e-8,
                "derivative {k} at s=1"
            );
            assert!(poly_eval(&d, 1.0).abs() < 1e-8, "derivative {k} at s=2");
        }
    }

    #[test]
    fn hard_zero_candidate_is_rejected() {
        let got = build_weight_from_coeffs(2.0, HARD_ZERO_CANDIDATE, 0.0);
        assert!(matches!(got, Err(Error::WeightConstruction(_))));
    }

    #[test]
    fn corrupted_coefficients_are_rejected() {
        // Breaking the phi'' bound while keeping every junction exact: walk
        // far along the zero-data family direction.
        let mut bad = PLATEAU_BASE;
        for (ck, fk) in bad.iter_mut().zip(PLATEAU_FREE.iter()) {
            *ck += -3000.0 * fk;
        }
        let got = build_weight_from_coeffs(2.0, bad, poly_eval(&bad, 1.0));
        assert!(matches!(got, Err(Error::WeightConstruction(ref m)) if m.contains("phi''")));

        // Breaking a junction.
        let mut bad = PLATEAU_BASE;
        bad[4] += 3.0;
        let got = build_weight_from_coeffs(2.0, bad, poly_eval(&bad, 1.0));
        assert!(matches!(got, Err(Error::WeightConstruction(ref m)) if m.contains("junction")));
    }

    #[test]
    fn weight_scale_must_be_at_least_one() {
        assert!(build_weight(0.5).is_err());
        assert!(build_weight(f64::NAN).is_err());
    }

    #[test]
    fn i_r_vanishes_for_real_fields() {
        let g = make_grid(32.0, 1024).unwrap();
        let w = build_weight(4.0).unwrap();
        let u = RadialField::from_real_fn(&g, |r| (-0.3 * r * r).exp());
        let scale = crate::functionals::mass(&u);
        assert!(i_r(&u, &w).abs() < 1e-13 * scale.max(1.0));
    }
}
