//! Property tests over seeded random data.

use modlab::gwp::{build_tilde_u, cubic_of_tilde, remainder_r, source_g, track_gwp};
use modlab::modspace::WindowFamily;
use modlab::nls::{free_evolve, picard_iterates, solve_nls};
use modlab::{Field, Grid, ModParams, Sign, SolverConfig, TestFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(4, 256).unwrap()
}

fn field(seed: u64, amplitude: f64) -> Field {
    TestFunction::random_schwartz(amplitude, seed).build(&grid()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fourier_round_trip(seed in 0u64..1000) {
        let f = field(seed, 1.0);
        let back = Field::from_spectrum(f.grid(), f.spectrum().to_vec()).unwrap();
        prop_assert!(back.max_abs_diff(&f).unwrap() < 1e-13);
    }

    #[test]
    fn mod_norm_homogeneous(seed in 0u64..1000, gamma in 0.01f64..10.0, q in 1.0f64..4.0) {
        let fam = WindowFamily::new(&grid(), 30).unwrap();
        let f = field(seed, 1.0);
        let params = ModParams::new(2.0, q, 0.0).unwrap();
        let a = fam.mod_norm(&f.scaled_real(gamma), params).unwrap();
        let b = gamma * fam.mod_norm(&f, params).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b);
        let t = fam.tilde_norm(&f.scaled_real(gamma), q).unwrap();
        prop_assert!((t - gamma * fam.tilde_norm(&f, q).unwrap()).abs() <= 1e-13 * t);
    }

    #[test]
    fn free_flow_keeps_m2q(seed in 0u64..1000, t in 0.0f64..50.0) {
        let fam = WindowFamily::new(&grid(), 30).unwrap();
        let f = field(seed, 1.0);
        for q in [1.0, 2.0, 4.0] {
            let params = ModParams::new(2.0, q, 0.0).unwrap();
            let a = fam.mod_norm(&free_evolve(&f, t), params).unwrap();
            let b = fam.mod_norm(&f, params).unwrap();
            prop_assert!((a / b - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn triangle_inequality(a in 0u64..1000, b in 0u64..1000) {
        let fam = WindowFamily::new(&grid(), 30).unwrap();
        let (f, g) = (field(a, 1.0), field(b, 1.0));
        for (p, q) in [(1.0, 1.0), (2.0, 1.0), (f64::INFINITY, 2.0)] {
            let params = ModParams::new(p, q, 0.0).unwrap();
            let lhs = fam.mod_norm(&f.add(&g).unwrap(), params).unwrap();
            let rhs = fam.mod_norm(&f, params).unwrap() + fam.mod_norm(&g, params).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn solver_keeps_mass(seed in 0u64..1000, focusing in any::<bool>()) {
        let sign = if focusing { Sign::Focusing } else { Sign::Defocusing };
        let u0 = field(seed, 0.5);
        let traj = solve_nls(&u0, &SolverConfig::new(sign, 1.0, 200).recording(50)).unwrap();
        let m0 = u0.mass();
        for s in traj.states() {
            prop_assert!(((s.mass() - m0) / m0).abs() < 1e-12);
        }
    }

    #[test]
    fn picard_parity_and_homogeneity(seed in 0u64..1000, gamma in 0.2f64..2.0) {
        let f = field(seed, 0.3);
        let p = picard_iterates(&f, 5, 0.5, 20, Sign::Defocusing).unwrap();
        let q = picard_iterates(&f.scaled_real(gamma), 5, 0.5, 20, Sign::Defocusing).unwrap();
        prop_assert_eq!(p.iterate(2).linf_l2_norm(), 0.0);
        prop_assert_eq!(p.iterate(4).linf_l2_norm(), 0.0);
        for n in [1, 3, 5] {
            let scaled = p.iterate(n).scaled(Complex64::new(gamma.powi(n as i32), 0.0));
            let err = q.iterate(n).linf_l2_distance(&scaled).unwrap();
            prop_assert!(err <= 1e-11 * scaled.linf_l2_norm());
        }
    }
}

#[test]
fn splitting_identities() {
    let u0 = TestFunction::gaussian(0.3).build(&grid()).unwrap();
    let p = picard_iterates(&u0, 5, 0.5, 20, Sign::Defocusing).unwrap();
    let total = source_g(&p).unwrap().add(&remainder_r(&p).unwrap()).unwrap();
    let cubic = cubic_of_tilde(&p).unwrap();
    assert!(total.linf_l2_distance(&cubic).unwrap() < 1e-13 * cubic.linf_l2_norm());
    assert_eq!(build_tilde_u(&p).state(0).max_abs_diff(&u0).unwrap(), 0.0);
}

#[test]
fn tracked_remainder_starts_at_zero() {
    let u0 = TestFunction::gaussian(0.2).build(&grid()).unwrap();
    let cfg = SolverConfig::new(Sign::Defocusing, 1.0, 400).recording(10);
    let report = track_gwp(&u0, 3, &cfg).unwrap();
    assert_eq!(report.rows[0].mass_v, 0.0);
    assert!(report.split_error < 1e-14);
    assert!(report.max_mass_drift() < 1e-12);
}
