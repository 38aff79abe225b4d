//! Modulation fit: orbit-point recovery, perturbation response, phase and
//! scale equivariance, the quadratic form, kernel relations, and the
//! trajectory tracker on synthetic logs.

use num_complex::Complex64;
use std::f64::consts::PI;

use cqnls::dynamics::{IntegratorConfig, Termination, TrajectoryLog};
use cqnls::error::Error;
use cqnls::functionals::{self, DiagnosticsRecord};
use cqnls::grid::{integrate_radial, make_grid, radial_laplacian, RadialField, RadialGrid};
use cqnls::ground_state::{
    eval_w, reference_constants, scaled_grad_tail, scaled_l6_tail, scaled_state, GroundStateRef,
};
use cqnls::modulation::{
    apply_l1, apply_l2, eval_quadratic_form, fit, track_modulation, DEFAULT_GATE_FACTOR,
};

fn gate(reference: &GroundStateRef) -> f64 {
    DEFAULT_GATE_FACTOR * reference.grad_norm_sq
}

/// A fixed smooth complex perturbation profile.
fn bump(r: f64) -> Complex64 {
    Complex64::new(1.0, 0.5) * (-r * r).exp()
}

fn perturbed(grid: &RadialGrid, theta: f64, mu: f64, eps: f64) -> RadialField {
    let base = scaled_state(theta, mu, grid);
    let values = base
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&s, &r)| s + eps * bump(r))
        .collect();
    RadialField::new(grid, values).unwrap()
}

#[test]
fn exact_orbit_point_is_recovered() {
    // The discrete root sits (mu*dr)^4-close to the continuum parameters,
    // so the 1e-6 bars need this resolution at mu = 3.
    let grid = make_grid(64.0, 4095).unwrap();
    let reference = reference_constants().unwrap();
    let u = scaled_state(0.7, 3.0, &grid);
    let m = fit(&u, &reference, gate(&reference)).unwrap();
    assert!(m.converged);
    assert!((m.theta - 0.7).abs() < 1e-6, "theta {}", m.theta);
    assert!((m.mu / 3.0 - 1.0).abs() < 1e-6, "mu {}", m.mu);
    assert!(m.g_h1_norm < 1e-6, "g_h1 {}", m.g_h1_norm);
}

#[test]
fn global_phase_half_pi_is_recovered() {
    let grid = make_grid(64.0, 2047).unwrap();
    let reference = reference_constants().unwrap();
    let u = scaled_state(PI / 2.0, 1.0, &grid);
    let m = fit(&u, &reference, gate(&reference)).unwrap();
    assert!((m.theta - PI / 2.0).abs() < 1e-6, "theta {}", m.theta);
}

#[test]
fn perturbation_response_is_first_order() {
    let grid = make_grid(64.0, 2047).unwrap();
    let reference = reference_constants().unwrap();
    let g = gate(&reference);
    let errs: Vec<(f64, f64)> = [1e-3, 5e-4]
        .iter()
        .map(|&eps| {
            let m = fit(&perturbed(&grid, 0.7, 3.0, eps), &reference, g).unwrap();
            assert!(m.converged);
            assert!(
                m.orth_residual_1.abs() < 1e-8 * reference.grad_norm_sq
                    && m.orth_residual_2.abs() < 1e-8 * reference.grad_norm_sq,
                "orthogonality residuals {} {}",
                m.orth_residual_1,
                m.orth_residual_2
            );
            ((m.theta - 0.7).abs(), (m.mu / 3.0 - 1.0).abs())
        })
        .collect();
    let (t1, u1) = errs[0];
    let (t2, u2) = errs[1];
    assert!(t1 < 1e-3 && u1 < 1e-3, "errors at eps=1e-3: {t1:.3e} {u1:.3e}");
    let rt = t2 / t1;
    let ru = u2 / u1;
    assert!(rt > 0.35 && rt < 0.65, "theta shrink ratio {rt}");
    assert!(ru > 0.35 && ru < 0.65, "mu shrink ratio {ru}");
}

#[test]
fn reconstruction_is_exact_bookkeeping() {
    let grid = make_grid(64.0, 2047).unwrap();
    let reference = reference_constants().unwrap();
    let u = perturbed(&grid, 1.1, 2.0, 1e-3);
    let m = fit(&u, &reference, gate(&reference)).unwrap();
    let orbit = scaled_state(m.theta, m.mu, &grid);
    let rot = Complex64::from_polar(1.0, m.theta);
    let err = u
        .values()
        .iter()
        .zip(m.g.values())
        .zip(orbit.values())
        .map(|((&uj, &gj), &oj)| (uj - (rot * gj + oj)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12 * u.max_abs(), "reconstruction error {err:.3e}");
}

#[test]
fn fit_is_phase_equivariant() {
    let grid = make_grid(64.0, 2047).unwrap();
    let reference = reference_constants().unwrap();
    let g = gate(&reference);
    let u = perturbed(&grid, 0.3, 2.0, 1e-3);
    let alpha = 0.9;
    let mut rotated = u.clone();
    rotated.scale(Complex64::from_polar(1.0, alpha));
    let a = fit(&u, &reference, g).unwrap();
    let b = fit(&rotated, &reference, g).unwrap();
    let dtheta = (b.theta - a.theta - alpha).rem_euclid(2.0 * PI);
    let wrapped = dtheta.min(2.0 * PI - dtheta);
    assert!(wrapped < 1e-8, "theta shift error {wrapped:.3e}");
    assert!((b.mu / a.mu - 1.0).abs() < 1e-10);
    assert!((b.g_h1_norm / a.g_h1_norm - 1.0).abs() < 1e-10);
}

#[test]
fn fit_is_scale_equivariant() {
    // A perturbation with a component along the orbit directions shifts
    // (theta, mu) at first order, and the remainder then carries their
    // slowly decaying profiles; the two fits see domains r_max and
    // lambda*r_max, so those tails spoil the comparison at a level set by
    // the domain, not by eps. Testing along a direction orthogonal to the
    // orbit (in the pairing the fit itself uses) exposes the clean map.
    let grid = make_grid(100.0, 16383).unwrap();
    let reference = reference_constants().unwrap();
    let g = gate(&reference);
    let lambda = 2.0_f64;

    let overlap = |q: &dyn Fn(f64) -> f64| -> f64 {
        let field = RadialField::from_real_fn(&grid, q);
        let dq = cqnls::grid::radial_derivative(&field);
        dq.values()
            .iter()
            .zip(grid.nodes())
            .map(|(d, &r)| d.re * cqnls::ground_state::eval_w_prime(r) * r * r)
            .sum()
    };
    let c = overlap(&|r| r * r * (-r * r).exp()) / overlap(&|r| (-r * r).exp());
    let p = move |x: f64| (x * x - c) * (-x * x).exp();

    let eps = 1e-4;
    let phase = Complex64::from_polar(1.0, 0.3);
    let f = move |r: f64| phase * (eval_w(r) + Complex64::new(0.0, eps) * p(r));
    let u = RadialField::from_fn(&grid, f);
    let u_scaled = RadialField::from_fn(&grid, |r| lambda.sqrt() * f(lambda * r));
    let a = fit(&u, &reference, g).unwrap();
    let b = fit(&u_scaled, &reference, g).unwrap();
    assert!(
        (b.mu / (lambda * a.mu) - 1.0).abs() < 1e-6,
        "mu ratio {} vs {}",
        b.mu,
        lambda * a.mu
    );
    assert!(
        (b.g_h1_norm / a.g_h1_norm - 1.0).abs() < 1e-6,
        "g_h1 {} vs {}",
        b.g_h1_norm,
        a.g_h1_norm
    );
}

#[test]
fn fit_rejects_zero_and_far_fields() {
    let grid = make_grid(64.0, 511).unwrap();
    let reference = reference_constants().unwrap();
    let zero = RadialField::zeros(&grid);
    assert!(matches!(fit(&zero, &reference, gate(&reference)), Err(Error::ZeroField)));
    let far = RadialField::from_real_fn(&grid, |r| 0.1 * (-r * r).exp());
    match fit(&far, &reference, gate(&reference)) {
        Err(Error::NotNearOrbit { delta, gate: bar }) => {
            assert!(delta >= bar, "delta {delta} gate {bar}");
        }
        other => panic!("expected a not-near-orbit error, got {other:?}"),
    }
}

#[test]
fn quadratic_form_values_on_the_orbit() {
    let grid = make_grid(64.0, 4095).unwrap();
    let reference = reference_constants().unwrap();
    let gref = reference.grad_norm_sq;
    let w = scaled_state(0.0, 1.0, &grid);
    let gt = scaled_grad_tail(1.0, grid.r_max());
    let lt = scaled_l6_tail(1.0, grid.r_max());

    // F(ih) pairs h against the second linearized operator; on the ground
    // state it vanishes once the truncated norms are tail-completed.
    let mut iw = w.clone();
    iw.scale(Complex64::new(0.0, 1.0));
    let f_iw = eval_quadratic_form(&iw, &reference) + 0.5 * (gt - lt);
    assert!(f_iw.abs() < 1e-4 * gref, "F(iW) = {f_iw:.3e}");

    // F(h) on the real ground state reduces to 2<Lap W, W> = -2 grad.
    let f_w = eval_quadratic_form(&w, &reference) + 0.5 * gt - 2.5 * lt;
    assert!(
        (f_w + 2.0 * gref).abs() < 1e-2 * gref,
        "F(W) = {f_w:.6} vs {}",
        -2.0 * gref
    );

    let zero = RadialField::zeros(&grid);
    assert_eq!(eval_quadratic_form(&zero, &reference), 0.0);
}

#[test]
fn kernel_relations_hold_on_the_grid() {
    let grid = make_grid(64.0, 4095).unwrap();
    let w = scaled_state(0.0, 1.0, &grid);
    let scale_sq: Vec<f64> = w.values().iter().map(|v| v.norm_sqr().powi(5)).collect();
    let scale = integrate_radial(&grid, &scale_sq).sqrt();

    let l2w = apply_l2(&w);
    let l2_sq: Vec<f64> = l2w.values().iter().map(|v| v.norm_sqr()).collect();
    let l2_norm = integrate_radial(&grid, &l2_sq).sqrt();
    assert!(l2_norm < 1e-3 * scale, "L2 W norm {l2_norm:.3e} vs scale {scale:.3e}");

    let l1w = apply_l1(&w);
    let lap = radial_laplacian(&w);
    let diff_sq: Vec<f64> = l1w
        .values()
        .iter()
        .zip(lap.values())
        .map(|(a, b)| (a - 4.0 * b).norm_sqr())
        .collect();
    let diff = integrate_radial(&grid, &diff_sq).sqrt();
    // L1 W - 4 Lap W = -5 (Lap W + W^5), five times the first residual.
    assert!(diff < 5e-3 * scale, "L1 relation residual {diff:.3e}");

    let zero = RadialField::zeros(&grid);
    assert!(apply_l1(&zero).values().iter().all(|v| v.norm() == 0.0));
}

#[test]
fn remainder_norm_tracks_delta() {
    // For states near a scaled orbit point with a small truncation tail,
    // |grad - ref| and the fitted remainder stay comparable as the
    // perturbation shrinks. The bracket value is a regression baseline.
    let grid = make_grid(200.0, 4095).unwrap();
    let reference = reference_constants().unwrap();
    let g = gate(&reference);
    let mut ratios = Vec::new();
    for &eps in &[5e-2, 2.5e-2, 1.25e-2] {
        let u = perturbed(&grid, 0.5, 4.0, eps);
        let m = fit(&u, &reference, g).unwrap();
        let delta = functionals::delta(&u, &reference);
        ratios.push(m.g_h1_norm / delta);
    }
    for r in &ratios {
        assert!(*r > 0.05 && *r < 20.0, "ratio {r} outside the recorded bracket");
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 3.0, "ratios {ratios:?} not comparable");
}

fn synthetic_log(grid: &RadialGrid, reference: &GroundStateRef, mus: &[(f64, f64)]) -> TrajectoryLog {
    let fields: Vec<(f64, RadialField)> = mus
        .iter()
        .map(|&(t, mu)| (t, scaled_state(0.7, mu, grid)))
        .collect();
    let records: Vec<DiagnosticsRecord> = fields
        .iter()
        .map(|(t, u)| DiagnosticsRecord::measure(*t, u, reference))
        .collect();
    let initial = fields[0].1.clone();
    TrajectoryLog::from_parts(
        records,
        fields,
        vec![(0.0, 1e-3)],
        Termination::ReachedT,
        initial,
        IntegratorConfig::default(),
    )
    .unwrap()
}

#[test]
fn tracker_reports_zero_drift_on_a_frozen_state() {
    let grid = make_grid(64.0, 4095).unwrap();
    let reference = reference_constants().unwrap();
    let times: Vec<(f64, f64)> = (0..5).map(|i| (0.1 * i as f64, 2.0)).collect();
    let log = synthetic_log(&grid, &reference, &times);
    let points = track_modulation(&log, &reference, gate(&reference));
    assert_eq!(points.len(), 3, "interior snapshot count");
    for p in &points {
        assert!((p.mu - 2.0).abs() < 1e-6);
        assert!(p.ratio_estimlad.abs() < 1e-10, "drift ratio {}", p.ratio_estimlad);
        assert!(p.ratio_estimmodu.is_finite() && p.ratio_estimmodu > 0.0);
    }
}

#[test]
fn tracker_recovers_linear_scale_growth() {
    let grid = make_grid(64.0, 2047).unwrap();
    let reference = reference_constants().unwrap();
    let times: Vec<(f64, f64)> = (0..11).map(|i| {
        let t = 0.05 * i as f64;
        (t, 2.0 + t)
    }).collect();
    let log = synthetic_log(&grid, &reference, &times);
    let points = track_modulation(&log, &reference, gate(&reference));
    assert_eq!(points.len(), 9);
    for p in &points {
        // ratio_estimlad = |mu'/mu| / (mu^2 delta); undo the normalization.
        let rate = p.ratio_estimlad * p.mu * p.mu * p.delta;
        let expect = 1.0 / (2.0 + p.t);
        assert!(
            (rate - expect).abs() < 0.05 * expect,
            "t={} rate {rate} vs {expect}",
            p.t
        );
        assert!((p.theta - 0.7).abs() < 1e-6);
    }
}
