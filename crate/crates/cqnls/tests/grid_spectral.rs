//! Spectral-accuracy and conservation checks for the radial grid layer.

use num_complex::Complex64;
use std::f64::consts::PI;

use cqnls::functionals;
use cqnls::grid::{
    apply_linear_propagator, boundary_mass_fraction, integrate_radial, make_grid,
    radial_derivative, radial_laplacian, RadialField,
};

#[test]
fn quadrature_matches_gaussian_closed_form() {
    let grid = make_grid(32.0, 4095).unwrap();
    let u = RadialField::from_real_fn(&grid, |r| (-r * r).exp());
    let sq: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
    // ∫ exp(−2r²) dx = (π/2)^{3/2}
    let exact = (PI / 2.0).powf(1.5);
    assert!((integrate_radial(&grid, &sq) - exact).abs() < 1e-12 * exact);
    assert!((2.0 * functionals::mass(&u) - exact).abs() < 1e-12 * exact);
}

#[test]
fn propagator_is_exact_on_eigenmodes() {
    // v = sin(k r)/r is an eigenmode of the radial Laplacian; the splitting
    // propagator must advance it by exactly exp(−i k² t) up to roundoff.
    let grid = make_grid(20.0, 2047).unwrap();
    let k = grid.wavenumbers()[24];
    let u = RadialField::from_fn(&grid, |r| Complex64::new((k * r).sin() / r, 0.0));
    let dt = 0.37;
    let v = apply_linear_propagator(&u, dt);
    let phase = Complex64::from_polar(1.0, -k * k * dt);
    let mut worst = 0.0_f64;
    for (a, b) in v.values().iter().zip(u.values()) {
        worst = worst.max((a - phase * b).norm());
    }
    assert!(worst < 1e-12, "eigenmode phase error {worst}");
}

#[test]
fn propagator_conserves_discrete_mass_and_is_unitary() {
    let grid = make_grid(24.0, 1023).unwrap();
    let u = RadialField::from_fn(&grid, |r| {
        Complex64::new((-0.3 * r * r).exp(), 0.2 * (-0.1 * (r - 3.0).powi(2)).exp())
    });
    let m0 = functionals::mass(&u);
    let mut v = u.clone();
    for _ in 0..50 {
        v = apply_linear_propagator(&v, 0.05);
    }
    let m1 = functionals::mass(&v);
    assert!((m1 - m0).abs() < 1e-12 * m0, "mass drift {:.3e}", (m1 - m0) / m0);
}

#[test]
fn free_dispersion_spreads_and_reaches_the_boundary_monitor() {
    let grid = make_grid(16.0, 511).unwrap();
    let u = RadialField::from_real_fn(&grid, |r| (-r * r).exp());
    assert!(boundary_mass_fraction(&u) < 1e-30);
    let mut v = u.clone();
    for _ in 0..40 {
        v = apply_linear_propagator(&v, 0.25);
    }
    // After t = 10 the free wave has long reached r = 16.
    assert!(boundary_mass_fraction(&v) > 1e-6);
}

#[test]
fn derivative_and_laplacian_converge_at_second_order() {
    // u = exp(−r²/2): u' = −r u, Δu = (r² − 3) u.
    let err = |n: usize| -> (f64, f64) {
        let grid = make_grid(16.0, n).unwrap();
        let u = RadialField::from_real_fn(&grid, |r| (-0.5 * r * r).exp());
        let du = radial_derivative(&u);
        let lap = radial_laplacian(&u);
        let mut e1 = 0.0_f64;
        let mut e2 = 0.0_f64;
        for ((r, d), l) in grid.nodes().iter().zip(du.values()).zip(lap.values()) {
            // Skip the outermost nodes where the one-sided closure is used.
            if *r > 14.0 {
                continue;
            }
            let w = (-0.5 * r * r).exp();
            e1 = e1.max((d.re + r * w).abs());
            e2 = e2.max((l.re - (r * r - 3.0) * w).abs());
        }
        (e1, e2)
    };
    let (c1, c2) = err(511);
    let (f1, f2) = err(1023);
    // Halving the spacing must cut the error by at least the second-order
    // factor 4 (minus slack); smooth even profiles often do better.
    assert!(c1 / f1 > 3.5, "first-derivative order: {}", c1 / f1);
    assert!(c2 / f2 > 3.5, "laplacian order: {}", c2 / f2);
}

#[test]
fn fields_detect_non_finite_entries() {
    let grid = make_grid(8.0, 127).unwrap();
    let mut u = RadialField::zeros(&grid);
    assert!(u.is_finite());
    u.values_mut()[3] = Complex64::new(f64::NAN, 0.0);
    assert!(!u.is_finite());
}
