//! The invariant suite: one block of rows per acceptance criterion, `C01`–`C13`.

use modlab::fit::loglog_fit;
use modlab::integrable::{alpha4, alpha_full, build_lambda, weight_identity, Alpha4Method};
use modlab::modspace::WindowFamily;
use modlab::nls::{free_evolve, picard_iterates, solve_nls};
use modlab::gwp::build_tilde_u;
use modlab::{Field, Grid, ModParams, Sign, SolverConfig, TestFunction, Trajectory};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{short_hash, Experiment, ScanConfig};
use crate::report::Report;
use crate::scans;

type CoreResult<T> = modlab::Result<T>;

pub const CRITERIA: [&str; 13] = [
    "C01", "C02", "C03", "C04", "C05", "C06", "C07", "C08", "C09", "C10", "C11", "C12", "C13",
];

/// Run every criterion; the suite hash covers the seed and each block's config hash.
pub fn run_verify(seed: u64) -> Report {
    let blocks: Vec<Report> = vec![
        windows(seed),
        solver(seed),
        mass(seed),
        invariance(seed),
        alpha_conservation(seed),
        weights(seed),
        expansion(seed),
        picard_series(seed),
        illposedness(seed),
        apriori(seed),
        gwp(seed),
        scans_block(seed),
        determinism(seed),
    ];
    let joined: String = blocks.iter().map(|b| b.config_hash.as_str()).collect::<Vec<_>>().join(",");
    let mut suite = Report::new("verify", &short_hash(&format!("seed={seed};{joined}")));
    for b in blocks {
        suite.rows.extend(b.rows);
        suite.fits.extend(b.fits);
    }
    suite
}

fn block(id: &str, what: &str, seed: u64, params: &str) -> Report {
    let mut r = Report::new("verify", &short_hash(&format!("{id};{what};seed={seed};{params}")));
    r.set_criterion(id);
    r
}

fn tagged(id: &str, mut c: ScanConfig, seed: u64, run: impl Fn(&ScanConfig, &mut Report)) -> Report {
    c.seed = seed;
    let mut r = Report::new("verify", &c.hash());
    r.set_criterion(id);
    run(&c, &mut r);
    r
}

fn windows(seed: u64) -> Report {
    let mut r = block("C01", "windows", seed, "R=8,M=1024,K=62");
    match Grid::new(8, 1024).and_then(|g| WindowFamily::new(&g, 62)) {
        Ok(fam) => {
            let inv = fam.invariant_report();
            r.at_most("R=8,M=1024,K=62", "partition_error", inv.partition_error, 1e-12);
            r.check("R=8,M=1024,K=62", "support_violations", inv.support_violations as f64, 0.0, 0.0);
            r.at_least("R=8,M=1024,K=62", "min_core_value", inv.min_core_value, 0.5);
        }
        Err(e) => r.error("R=8,M=1024,K=62", "windows", &e),
    }
    r
}

fn final_state(u0: &Field, sign: Sign, t: f64, steps: usize) -> CoreResult<Field> {
    Ok(solve_nls(u0, &SolverConfig::new(sign, t, steps).recording(steps))?.last().clone())
}

fn solver(seed: u64) -> Report {
    let mut r = block("C02", "solver", seed, "plane wave R=2,M=64,A=0.5,k=3; sech R=16,M=2048");
    for sign in [Sign::Defocusing, Sign::Focusing] {
        let case = format!("plane wave,sign={}", sign.name());
        let run = (|| -> CoreResult<f64> {
            let grid = Grid::new(2, 64)?;
            let (a, k) = (0.5, 3.0);
            let u0 = TestFunction::PlaneWave { amplitude: a, frequency: k }.build(&grid)?;
            let u = final_state(&u0, sign, 1.0, 1000)?;
            let omega = k * k + 2.0 * sign.value() * a * a;
            let exact = Field::from_fn(&grid, |x| Complex64::from_polar(a, k * x - omega));
            u.max_abs_diff(&exact)
        })();
        match run {
            Ok(e) => r.at_most(&case, "phase_error", e, 1e-10),
            Err(e) => r.error(&case, "phase_error", &e),
        }
    }
    let run = (|| -> CoreResult<(f64, f64)> {
        let grid = Grid::new(16, 2048)?;
        let u0 = TestFunction::Sech { amplitude: 1.0, center: 0.0 }.build(&grid)?;
        let states: Vec<Field> = [1000usize, 2000, 4000]
            .par_iter()
            .map(|&s| final_state(&u0, Sign::Focusing, 1.0, s))
            .collect::<CoreResult<_>>()?;
        let exact = Field::from_fn(&grid, |x| Complex64::from_polar(1.0 / x.cosh(), 1.0));
        let err = states[0].max_abs_diff(&exact)?;
        let ratio = states[0].l2_distance(&states[1])? / states[1].l2_distance(&states[2])?;
        Ok((err, ratio))
    })();
    match run {
        Ok((err, ratio)) => {
            r.at_most("sech soliton,dt=1e-3", "sup_error", err, 1e-4);
            r.check("sech soliton,dt=1e-3,5e-4,2.5e-4", "self_convergence_ratio", ratio, 3.6, 4.4);
        }
        Err(e) => r.error("sech soliton", "soliton", &e),
    }
    r
}

fn mass(seed: u64) -> Report {
    let mut c = ScanConfig::defaults(Experiment::Evolve);
    c.data = TestFunction::gaussian(1.0);
    c.final_time = 10.0;
    c.steps = 10_000;
    c.record_every = 100;
    tagged("C03", c, seed, scans::mass_rows)
}

fn invariance(seed: u64) -> Report {
    let mut r = block("C04", "free invariance", seed, "R=8,M=1024,random fields");
    let run = (|| -> CoreResult<Vec<(String, f64)>> {
        let grid = Grid::new(8, 1024)?;
        let fam = WindowFamily::new(&grid, WindowFamily::max_index_for(&grid))?;
        let mut out = Vec::new();
        for i in 0..3u64 {
            let f = TestFunction::random_schwartz(1.0, seed.wrapping_add(i)).build(&grid)?;
            for q in [1.0, 2.0, 4.0] {
                let params = ModParams { p: 2.0, q, s: 0.0 };
                let base = fam.mod_norm(&f, params)?;
                for t in [0.5, 5.0, 50.0] {
                    let v = fam.mod_norm(&free_evolve(&f, t), params)?;
                    out.push((format!("member={i},q={q},t={t}"), (v / base - 1.0).abs()));
                }
            }
        }
        Ok(out)
    })();
    match run {
        Ok(rows) => {
            for (case, e) in rows {
                r.at_most(&case, "invariance_error", e, 1e-12);
            }
        }
        Err(e) => r.error("invariance", "invariance_error", &e),
    }
    r
}

fn alpha_conservation(seed: u64) -> Report {
    let c = ScanConfig::defaults(Experiment::Conservation);
    tagged("C05", c, seed, scans::alpha_rows)
}

fn weights(seed: u64) -> Report {
    let mut r = block("C06", "weight identity", seed, "R=4,M=256,20 fields");
    let run = (|| -> CoreResult<Vec<(f64, f64, f64)>> {
        let grid = Grid::new(4, 256)?;
        let fields: Vec<Field> = (0..20u64)
            .map(|i| TestFunction::random_schwartz(1.0, seed.wrapping_add(i)).build(&grid))
            .collect::<CoreResult<_>>()?;
        [0.5, 1.0, 2.0]
            .par_iter()
            .map(|&kappa| {
                let mut worst: f64 = 0.0;
                let mut c_star = f64::NAN;
                for f in &fields {
                    let w = weight_identity(f, kappa)?;
                    worst = worst.max((w.combo - w.weighted).abs() / w.weighted.abs());
                    c_star = w.c_star;
                }
                Ok((kappa, worst, c_star))
            })
            .collect()
    })();
    match run {
        Ok(rows) => {
            for (kappa, worst, c_star) in rows {
                let case = format!("kappa={kappa}");
                r.at_most(&case, "identity_error", worst, 1e-12);
                r.at_most(&case, "c_star_minus_kappa", (c_star - kappa).abs(), 1e-10);
                r.fit(&format!("c_star[kappa={kappa}]"), c_star);
            }
        }
        Err(e) => r.error("weights", "identity_error", &e),
    }
    r
}

fn expansion(seed: u64) -> Report {
    let mut r = block("C07", "alpha expansion", seed, "R=2,M=128,kappa=1");
    let gammas = [0.0125, 0.025, 0.05];
    for sign in [Sign::Defocusing, Sign::Focusing] {
        let case = format!("sign={},kappa=1", sign.name());
        let run = (|| -> CoreResult<(Vec<f64>, f64)> {
            let grid = Grid::new(2, 128)?;
            let base = TestFunction::gaussian(1.0).build(&grid)?;
            let tails = gammas
                .iter()
                .map(|&g| {
                    let a = alpha_full(&base.scaled_real(g), 1.0, sign)?;
                    Ok((a.alpha_full - a.alpha2 - a.alpha4).abs())
                })
                .collect::<CoreResult<Vec<f64>>>()?;
            // Quartic part of the truncated matrix against the quadrature formula.
            let f = base.scaled_real(0.05);
            let a = alpha_full(&f, 1.0, sign)?;
            let tr = build_lambda(&f, 1.0)?.trace().re;
            let quartic = a.raw_log_det - tr;
            Ok((tails, ((quartic - a.alpha4) / a.alpha4).abs()))
        })();
        match run {
            Ok((tails, quartic_gap)) => {
                let slope = loglog_fit(&gammas, &tails).slope;
                r.fit(&format!("tail_slope[{case}]"), slope);
                r.check(&case, "tail_amplitude_slope", slope, 5.5, 6.5);
                r.at_most(&case, "matrix_quartic_relative_gap", quartic_gap, 0.05);
            }
            Err(e) => r.error(&case, "expansion", &e),
        }
    }
    let run = (|| -> CoreResult<Vec<(f64, f64)>> {
        let grid = Grid::new(2, 128)?;
        let f = TestFunction::random_schwartz(1.0, seed).build(&grid)?;
        [0.5, 1.0, 2.0]
            .iter()
            .map(|&k| {
                let n = alpha4(&f, k, Alpha4Method::Naive)?;
                let a = alpha4(&f, k, Alpha4Method::Accelerated)?;
                Ok((k, (n - a).abs() / a.abs()))
            })
            .collect()
    })();
    match run {
        Ok(rows) => {
            for (k, gap) in rows {
                r.at_most(&format!("M=128,kappa={k}"), "alpha4_naive_vs_accelerated", gap, 1e-10);
            }
        }
        Err(e) => r.error("M=128", "alpha4_naive_vs_accelerated", &e),
    }
    r
}

/// `(4·fine - coarse)/3` for two trajectories on the same slab.
fn richardson(coarse: &Trajectory, fine: &Trajectory) -> CoreResult<Trajectory> {
    fine.scaled(Complex64::new(4.0 / 3.0, 0.0))
        .sub(&coarse.scaled(Complex64::new(1.0 / 3.0, 0.0)))
}

/// Distance between the solver and the depth-7 Picard sum, both Richardson-extrapolated.
fn picard_remainder(u0: &Field, depth: usize, slices: usize) -> CoreResult<f64> {
    let sign = Sign::Defocusing;
    let steps = 10 * slices;
    let coarse = solve_nls(u0, &SolverConfig::new(sign, 1.0, steps).recording(10))?;
    let fine = solve_nls(u0, &SolverConfig::new(sign, 1.0, 2 * steps).recording(20))?;
    let u = richardson(&coarse, &fine)?;
    let pc = picard_iterates(u0, depth, 1.0, 4 * slices, sign)?;
    let pf = picard_iterates(u0, depth, 1.0, 8 * slices, sign)?;
    let tc = build_tilde_u(&pc).subsample(4)?;
    let tf = build_tilde_u(&pf).subsample(8)?;
    u.linf_l2_distance(&richardson(&tc, &tf)?)
}

fn picard_series(seed: u64) -> Report {
    let mut r = block("C08", "picard series", seed, "R=4,M=256,depth=7,T=1");
    let gammas = [0.05, 0.1, 0.2];
    let run = (|| -> CoreResult<Vec<f64>> {
        let grid = Grid::new(4, 256)?;
        let base = TestFunction::gaussian(1.0).build(&grid)?;
        gammas
            .par_iter()
            .map(|&g| picard_remainder(&base.scaled_real(g), 7, 100))
            .collect()
    })();
    match run {
        Ok(rem) => {
            for (g, e) in gammas.iter().zip(&rem) {
                r.info(&format!("gamma={g}"), "remainder", *e);
            }
            let slope = loglog_fit(&gammas, &rem).slope;
            r.fit("remainder_slope", slope);
            r.check("depth=7", "remainder_amplitude_slope", slope, 8.5, 9.5);
        }
        Err(e) => r.error("depth=7", "remainder_amplitude_slope", &e),
    }
    let run = (|| -> CoreResult<(f64, Vec<f64>)> {
        let grid = Grid::new(4, 256)?;
        let f = TestFunction::random_schwartz(0.5, seed).build(&grid)?;
        let gamma = 0.7;
        let p = picard_iterates(&f, 7, 1.0, 50, Sign::Defocusing)?;
        let q = picard_iterates(&f.scaled_real(gamma), 7, 1.0, 50, Sign::Defocusing)?;
        let errs = (1..=7)
            .step_by(2)
            .map(|n| {
                let scaled = p.iterate(n).scaled(Complex64::new(gamma.powi(n as i32), 0.0));
                Ok(q.iterate(n).linf_l2_distance(&scaled)? / scaled.linf_l2_norm())
            })
            .collect::<CoreResult<Vec<f64>>>()?;
        Ok((p.iterate(2).linf_l2_norm(), errs))
    })();
    match run {
        Ok((even, errs)) => {
            r.check("n=2", "iterate_norm", even, 0.0, 0.0);
            for (n, e) in (1..=7).step_by(2).zip(errs) {
                r.at_most(&format!("n={n},gamma=0.7"), "homogeneity_error", e, 1e-11);
            }
        }
        Err(e) => r.error("homogeneity", "homogeneity_error", &e),
    }
    r
}

fn illposedness(seed: u64) -> Report {
    tagged("C09", ScanConfig::defaults(Experiment::Illposedness), seed, scans::illposedness)
}

fn apriori(seed: u64) -> Report {
    let mut c = ScanConfig::defaults(Experiment::Conservation);
    c.periods = 64;
    c.points = 2048;
    c.final_time = 10.0;
    c.steps = 1000;
    c.record_every = 10;
    c.members = 10;
    tagged("C10", c, seed, scans::apriori_rows)
}

fn gwp(seed: u64) -> Report {
    tagged("C11", ScanConfig::defaults(Experiment::GwpTrack), seed, scans::gwp)
}

fn scans_block(seed: u64) -> Report {
    let mut d = tagged("C12", ScanConfig::defaults(Experiment::Dispersion), seed, scans::dispersion);
    let s = tagged("C12", ScanConfig::defaults(Experiment::Scaling), seed, scans::scaling);
    d.rows.extend(s.rows);
    d.fits.extend(s.fits);
    d
}

/// A reduced scan run twice in process must give identical bytes.
fn determinism(seed: u64) -> Report {
    let mut c = ScanConfig::defaults(Experiment::Illposedness);
    c.n_list = vec![16.0, 32.0];
    c.seed = seed;
    let mut r = block("C13", "determinism", seed, &c.hash());
    let a = scans::run_scan(&c).to_csv();
    let b = scans::run_scan(&c).to_csv();
    match (a, b) {
        (Ok(a), Ok(b)) => r.check("reduced illposedness scan", "byte_mismatch", (a != b) as u8 as f64, 0.0, 0.0),
        (Err(e), _) | (_, Err(e)) => r.error("reduced illposedness scan", "byte_mismatch", &e),
    }
    r
}
