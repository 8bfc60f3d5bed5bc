//! Closed-form oracles for the numerical kernels.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use modlab::integrable::{alpha2, alpha4, alpha_full, build_lambda, weight_identity, Alpha4Method};
use modlab::modspace::{japanese, WindowFamily};
use modlab::nls::{
    duhamel, first_iterate_closed_form, free_evolve, free_trajectory, galilean, guaranteed_time,
    rescale, solve_nls, TimeEstimate,
};
use modlab::{Field, Grid, ModParams, Sign, SolverConfig, TestFunction};
use num_complex::Complex64;

fn sup(f: &Field) -> f64 {
    f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn constant_and_plane_wave_norms() {
    let g = Grid::new(4, 256).unwrap();
    let fam = WindowFamily::new(&g, 20).unwrap();
    let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
    let wave = Field::from_fn(&g, |x| Complex64::from_polar(1.0, 5.0 * x));
    for (p, q, s) in [(1.0, 1.0, 0.0), (2.0, 2.0, 1.0), (4.0, 1.0, -0.5), (f64::INFINITY, 2.0, 0.5)] {
        let params = ModParams::new(p, q, s).unwrap();
        let lp = if p.is_infinite() { 1.0 } else { g.length().powf(1.0 / p) };
        assert_relative_eq!(fam.mod_norm(&one, params).unwrap(), lp, max_relative = 1e-12);
        assert_relative_eq!(
            fam.mod_norm(&wave, params).unwrap(),
            japanese(5.0).powf(s) * lp,
            max_relative = 1e-12
        );
    }
}

#[test]
fn gaussian_norm_bracket() {
    let g = Grid::new(8, 1024).unwrap();
    let fam = WindowFamily::new(&g, 62).unwrap();
    let f = TestFunction::gaussian(1.0).build(&g).unwrap();
    let r = fam.mod_norm(&f, ModParams::new(2.0, 2.0, 0.0).unwrap()).unwrap() / f.l2_norm();
    assert!((1.0 / 3f64.sqrt()..=1.0).contains(&r), "{r}");
}

#[test]
fn mh_norm_of_constant() {
    let g = Grid::new(4, 256).unwrap();
    let fam = WindowFamily::new(&g, 20).unwrap();
    let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
    let (theta, q) = (-1.5, 1.0);
    let w = g.length() * g.dxi().sqrt();
    let lattice: f64 = (-20..=20).map(|n| japanese(n as f64).powf(theta * q)).sum();
    assert_relative_eq!(
        fam.mh_norm(&one, theta, q).unwrap(),
        w * lattice.powf(1.0 / q),
        max_relative = 1e-12
    );
}

#[test]
fn free_gaussian_amplitude() {
    // |S(t) e^{-x²/2}| peaks at (1 + 4t²)^{-1/4}.
    let g = Grid::new(64, 2048).unwrap();
    let f = TestFunction::gaussian(1.0).build(&g).unwrap();
    for t in [0.5, 1.0, 3.0] {
        let peak = sup(&free_evolve(&f, t));
        assert_relative_eq!(peak, (1.0 + 4.0 * t * t).powf(-0.25), max_relative = 1e-10);
    }
}

#[test]
fn plane_wave_phase_rotation() {
    let g = Grid::new(2, 64).unwrap();
    let (a, k) = (0.5, 3.0);
    let u0 = TestFunction::PlaneWave { amplitude: a, frequency: k }.build(&g).unwrap();
    for sign in [Sign::Defocusing, Sign::Focusing] {
        let u = solve_nls(&u0, &SolverConfig::new(sign, 1.0, 1000).recording(1000)).unwrap();
        let omega = k * k + 2.0 * sign.value() * a * a;
        let exact = Field::from_fn(&g, |x| Complex64::from_polar(a, k * x - omega));
        assert!(u.last().max_abs_diff(&exact).unwrap() < 1e-10);
    }
}

#[test]
fn galilean_boost_commutes_with_flow() {
    let g = Grid::new(4, 256).unwrap();
    let u0 = TestFunction::gaussian(0.6).build(&g).unwrap();
    let cfg = SolverConfig::new(Sign::Defocusing, 0.5, 2000).recording(2000);
    let boosted_then_solved = solve_nls(&galilean(&u0, 2, 0.0).unwrap(), &cfg).unwrap();
    let solved_then_boosted = galilean(solve_nls(&u0, &cfg).unwrap().last(), 2, 0.5).unwrap();
    let gap = boosted_then_solved.last().l2_distance(&solved_then_boosted).unwrap();
    assert!(gap < 1e-6 * u0.l2_norm(), "{gap}");
}

#[test]
fn duhamel_matches_frequency_formula() {
    let g = Grid::new(16, 256).unwrap();
    let u0 = TestFunction::FreqIndicator { start: 3.0, width: 0.75 }.build(&g).unwrap();
    let t = 0.1;
    let a1 = free_trajectory(&u0, t, 256).unwrap();
    let n = duhamel(&a1, &a1, &a1, Sign::Focusing).unwrap();
    let g_quad = n.last().scaled(Complex64::new(0.0, -0.5));
    let g_closed = first_iterate_closed_form(&u0, t).unwrap();
    assert!(g_quad.l2_distance(&g_closed).unwrap() < 1e-6 * g_closed.l2_norm());
}

#[test]
fn rescale_mass_scaling() {
    let g = Grid::new(8, 1024).unwrap();
    let f = TestFunction::gaussian(1.0).build(&g).unwrap();
    for lambda in [0.5, 2.0, 3.0] {
        let h = rescale(&f, lambda, &g).unwrap();
        assert_relative_eq!(h.l2_norm(), f.l2_norm() / lambda.sqrt(), max_relative = 1e-10);
    }
}

#[test]
fn guaranteed_time_examples() {
    let e = TimeEstimate::new(0.5, 1.0, 0.5, 3).unwrap();
    assert_relative_eq!(guaranteed_time(&e, 1.0).unwrap(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(guaranteed_time(&e, 0.01).unwrap(), 0.01f64.powf(-0.8), max_relative = 1e-12);
}

#[test]
fn quadratic_coefficient_of_gaussian() {
    // (1/2π)∫ 2κ|û|²/(ξ² + 4κ²) with |û|² = 2π e^{-ξ²}, κ = 1/2.
    let g = Grid::new(8, 1024).unwrap();
    let f = TestFunction::gaussian(1.0).build(&g).unwrap();
    let n = 200_000;
    let h = 40.0 / n as f64;
    let integral: f64 = (0..n)
        .map(|i| {
            let xi = -20.0 + (i as f64 + 0.5) * h;
            2.0 * PI * (-xi * xi).exp() / (xi * xi + 1.0)
        })
        .sum::<f64>()
        * h
        / (2.0 * PI);
    assert_relative_eq!(alpha2(&f, 0.5).unwrap(), integral, max_relative = 1e-8);
}

#[test]
fn quartic_coefficient_against_matrix() {
    let g = Grid::new(2, 128).unwrap();
    let f = TestFunction::gaussian(0.05).build(&g).unwrap();
    let lambda = build_lambda(&f, 1.0).unwrap();
    let traces = lambda.power_traces(2);
    let quartic = alpha4(&f, 1.0, Alpha4Method::Accelerated).unwrap();
    assert_relative_eq!(quartic, -0.5 * traces[1].re, max_relative = 5e-2);
    let naive = alpha4(&f, 1.0, Alpha4Method::Naive).unwrap();
    assert_relative_eq!(naive, quartic, max_relative = 1e-10);
}

#[test]
fn full_quantity_is_conserved() {
    let g = Grid::new(4, 256).unwrap();
    let u0 = TestFunction::gaussian(0.1).build(&g).unwrap();
    let traj = solve_nls(&u0, &SolverConfig::new(Sign::Focusing, 1.0, 1000).recording(500)).unwrap();
    let a0 = alpha_full(traj.state(0), 1.0, Sign::Focusing).unwrap().alpha_full;
    let a1 = alpha_full(traj.last(), 1.0, Sign::Focusing).unwrap().alpha_full;
    assert!(((a1 - a0) / a0).abs() < 1e-4);
}

#[test]
fn weight_identity_constant() {
    let g = Grid::new(4, 256).unwrap();
    let f = TestFunction::random_schwartz(1.0, 5).build(&g).unwrap();
    for kappa in [0.5, 1.0, 2.0] {
        let w = weight_identity(&f, kappa).unwrap();
        assert_relative_eq!(w.c_star, kappa, max_relative = 1e-10);
        assert_relative_eq!(w.combo, w.weighted, max_relative = 1e-12);
    }
}
