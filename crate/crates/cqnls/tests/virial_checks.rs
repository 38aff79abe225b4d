//! Virial-functional oracles and the vanishing identities on the
//! ground-state orbit.

use num_complex::Complex64;
use std::f64::consts::PI;

use cqnls::functionals::{grad_norm_sq, l4_norm_4, l6_norm_6};
use cqnls::grid::{make_grid, RadialField};
use cqnls::ground_state::{reference_constants, scaled_state};
use cqnls::virial::{build_weight, f_inf, f_r, fc_r, i_r, k_correction};

#[test]
fn weight_profile_values() {
    let w = build_weight(2.0).unwrap();
    // Inner region: phi = s².
    assert!((w.phi(0.5) - 0.25).abs() < 1e-14);
    assert!((w.phi_p(0.5) - 1.0).abs() < 1e-14);
    assert!((w.phi_pp(0.5) - 2.0).abs() < 1e-14);
    // Plateau joins with two flat derivatives at s = 2.
    assert!((w.phi(2.0) - 49.0 / 22.0).abs() < 1e-12);
    assert!(w.phi_p(2.0).abs() < 1e-12);
    assert!(w.phi_pp(2.0).abs() < 1e-12);
    assert_eq!(w.plateau(), w.phi(3.0));
    // Frozen transition polynomial (ascending powers of t = s − 1).
    let expect = [
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
    for (i, (got, want)) in w.transition_coeffs().iter().zip(expect).enumerate() {
        assert!((got - want).abs() < 1e-9, "coeff {i}: {got} vs {want}");
    }
    // Curvature bound holds across the transition.
    let sup = (0..=4000)
        .map(|i| w.phi_pp(1.0 + i as f64 / 4000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(sup <= 2.0 + 1e-10, "sup phi'' = {sup}");
}

#[test]
fn i_r_oracle_across_the_transition() {
    // u = exp(−r²)·exp(ir²), R = 2: the weight transition carries part of
    // the integral. Continuum value frozen from a 40-digit quadrature.
    let grid = make_grid(32.0, 16383).unwrap();
    let u = RadialField::from_fn(&grid, |r| {
        Complex64::from_polar((-r * r).exp(), r * r)
    });
    let w2 = build_weight(2.0).unwrap();
    let got = i_r(&u, &w2);
    assert!(
        (got - 11.81190771321725201015657).abs() < 1e-6,
        "I_R(R=2) = {got:.17}"
    );
    // R = 8 puts the support inside phi = s², where I_R is the plain
    // virial 3π√(π/2).
    let w8 = build_weight(8.0).unwrap();
    let got = i_r(&u, &w8);
    let exact = 3.0 * PI * (PI / 2.0).sqrt();
    assert!((got - exact).abs() < 1e-6, "I_R(R=8) = {got:.17} vs {exact:.17}");
    assert!((exact - 11.81220745929181480821798).abs() < 1e-12);
}

#[test]
fn f_r_oracle_with_wide_gaussian() {
    // u = exp(−r²/16) reaches across transition and plateau of R = 2.
    let grid = make_grid(64.0, 16383).unwrap();
    let u = RadialField::from_real_fn(&grid, |r| (-r * r / 16.0).exp());
    let w = build_weight(2.0).unwrap();
    let got = f_r(&u, &w);
    assert!(
        (got - 27.30305210598782800468144).abs() < 1e-5,
        "F_R(R=2) = {got:.17}"
    );
}

#[test]
fn f_r_reduces_to_f_inf_for_inner_data() {
    let grid = make_grid(64.0, 8191).unwrap();
    let u = RadialField::from_real_fn(&grid, |r| (-r * r).exp());
    let w = build_weight(8.0).unwrap();
    let direct = 8.0 * grad_norm_sq(&u) - 8.0 * l6_norm_6(&u) + 6.0 * l4_norm_4(&u);
    assert!((f_r(&u, &w) - direct).abs() < 1e-10 * direct.abs());
    assert!((f_inf(&u) - direct).abs() < 1e-10 * direct.abs());
}

#[test]
fn i_r_vanishes_for_real_and_phase_rotated_fields() {
    let grid = make_grid(32.0, 2047).unwrap();
    let w = build_weight(4.0).unwrap();
    let u = RadialField::from_real_fn(&grid, |r| (-r * r / 2.0).exp());
    assert_eq!(i_r(&u, &w), 0.0);
    // A global phase does not create a current.
    let mut v = u.clone();
    v.scale(Complex64::from_polar(1.0, 0.9));
    assert!(i_r(&v, &w).abs() < 1e-14);
}

#[test]
fn fc_r_vanishes_on_the_scaled_orbit() {
    // The cubic-free functional annihilates every scaled state for every
    // weight radius: the battery runs phases × scales × radii.
    let grid = make_grid(80.0, 16383).unwrap();
    let reference = reference_constants().unwrap();
    for r_scale in [2.0, 8.0, 32.0] {
        let w = build_weight(r_scale).unwrap();
        for theta in [0.0, 1.2] {
            for mu in [1.0, 4.0] {
                let u = scaled_state(theta, mu, &grid);
                let got = fc_r(&u, &w);
                assert!(
                    got.abs() < 1e-5 * reference.grad_norm_sq,
                    "theta = {theta}, mu = {mu}, R = {r_scale}: Fc = {got:.3e}"
                );
            }
        }
    }
}

#[test]
fn k_correction_vanishes_with_exact_tails() {
    let grid = make_grid(80.0, 32767).unwrap();
    let reference = reference_constants().unwrap();
    let w = build_weight(8.0).unwrap();
    for (theta, mu) in [(0.0, 1.0), (1.2, 4.0)] {
        let k = k_correction(theta, mu, &w, &grid);
        assert!(
            k.abs() < 1e-5 * reference.grad_norm_sq,
            "theta = {theta}, mu = {mu}: K = {k:.3e}"
        );
    }
}

#[test]
fn functionals_are_phase_invariant() {
    let grid = make_grid(32.0, 2047).unwrap();
    let w = build_weight(4.0).unwrap();
    let u = RadialField::from_fn(&grid, |r| {
        Complex64::new((-0.3 * r * r).exp(), 0.1 * (-0.2 * r * r).exp() * r)
    });
    let mut v = u.clone();
    v.scale(Complex64::from_polar(1.0, 2.2));
    assert!((f_r(&u, &w) - f_r(&v, &w)).abs() < 1e-12 * f_r(&u, &w).abs());
    assert!((fc_r(&u, &w) - fc_r(&v, &w)).abs() < 1e-12 * fc_r(&u, &w).abs().max(1.0));
    assert!((i_r(&u, &w) - i_r(&v, &w)).abs() < 1e-12 * i_r(&u, &w).abs().max(1.0));
}

#[test]
fn weight_radius_scales_the_plateau() {
    // w_R = R²·phi(r/R): doubling R quadruples the plateau height.
    let w2 = build_weight(2.0).unwrap();
    let w4 = build_weight(4.0).unwrap();
    assert!((w4.plateau() / w2.plateau() - 1.0).abs() < 1e-12);
    assert_eq!(w2.r_scale(), 2.0);
    assert_eq!(w4.r_scale(), 4.0);
}
