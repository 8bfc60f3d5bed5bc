//! Experiment drivers. Parameter points fan out over the current rayon pool and
//! rows are appended in declared parameter order.

use modlab::fit::{linear_fit, loglog_fit, max_of};
use modlab::gwp::{build_tilde_u, energy, hamiltonian, sandwich_ratios, source_g, track_gwp};
use modlab::integrable::alpha_full;
use modlab::modspace::WindowFamily;
use modlab::nls::{
    duhamel, first_iterate_closed_form, free_evolve, free_trajectory, phase_mismatch,
    phase_mismatch_expanded, picard_iterates, rescale, solve_nls,
};
use modlab::{Field, Grid, ModParams, Sign, SolverConfig, TestFunction, Trajectory};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Experiment, ScanConfig};
use crate::report::Report;

type CoreResult<T> = modlab::Result<T>;

/// Log-log slope of the running maximum of `ratios` against the scanned parameter.
/// A constant is called stable when this stays below the trend threshold.
pub fn max_trend(xs: &[f64], ratios: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let running: Vec<f64> = ratios
        .iter()
        .map(|&r| {
            best = best.max(r);
            best
        })
        .collect();
    loglog_fit(xs, &running).slope
}

/// Log-log slope of per-member ratios against seed index. Member order carries no
/// meaning in a seeded family, so the ratios themselves are fitted.
pub fn seed_trend(ratios: &[f64]) -> f64 {
    let xs: Vec<f64> = (1..=ratios.len()).map(|i| i as f64).collect();
    loglog_fit(&xs, ratios).slope
}

fn fmt_exp(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn family(grid: &Grid) -> CoreResult<WindowFamily> {
    WindowFamily::new(grid, WindowFamily::max_index_for(grid))
}

pub fn run_scan(c: &ScanConfig) -> Report {
    let mut rep = Report::new(c.experiment.name(), &c.hash());
    match c.experiment {
        Experiment::Illposedness => illposedness(c, &mut rep),
        Experiment::Dispersion => dispersion(c, &mut rep),
        Experiment::Scaling => scaling(c, &mut rep),
        Experiment::Conservation => conservation(c, &mut rep),
        Experiment::Norm => norm(c, &mut rep),
        Experiment::Evolve => evolve(c, &mut rep),
        Experiment::Picard => picard(c, &mut rep),
        Experiment::Alpha => alpha(c, &mut rep),
        Experiment::GwpTrack => gwp(c, &mut rep),
    }
    rep
}

/// Smallest power-of-two point count at least `points` whose Nyquist frequency reaches `need`.
pub fn points_for_nyquist(periods: u32, points: usize, need: f64) -> usize {
    let mut m = points.next_power_of_two().max(16);
    while (m as f64) / (2.0 * periods as f64) < need {
        m *= 2;
    }
    m
}

struct IllPoint {
    crosscheck: f64,
    // (p, q, s, t) in declared order with r(N).
    ratios: Vec<f64>,
}

fn illposed_point(c: &ScanConfig, n: f64) -> CoreResult<IllPoint> {
    let width = n.powf(-c.epsilon);
    let grid = Grid::new(c.periods, points_for_nyquist(c.periods, c.points, n + 5.0))?;
    let u0 = TestFunction::FreqIndicator { start: n, width }.build(&grid)?;
    let fam = family(&grid)?;
    // N(u) = -2iσ g, so g = (iσ/2) N(u).
    let undo = Complex64::new(0.0, 0.5 * c.sign.value());
    let mut crosscheck: f64 = 0.0;
    let mut ratios = Vec::new();
    for &t in &c.t_list {
        let closed = first_iterate_closed_form(&u0, t)?;
        let a1 = free_trajectory(&u0, t, c.slices)?;
        let quad = duhamel(&a1, &a1, &a1, c.sign)?.last().scaled(undo);
        crosscheck = crosscheck.max(quad.l2_distance(&closed)? / closed.l2_norm());
        for &p in &c.p_list {
            for &q in &c.q_list {
                for &s in &c.s_list {
                    let params = ModParams::new(p, q, s)?;
                    let num = fam.mod_norm(&closed, params)?;
                    let den = fam.mod_norm(&u0, params)?;
                    ratios.push(num / den.powi(3));
                }
            }
        }
    }
    Ok(IllPoint { crosscheck, ratios })
}

/// Worst relative gap between the factored and expanded phase mismatch over
/// seeded lattice tuples with `|ξ| ≤ bound`.
pub fn factorization_error(periods: u32, bound: f64, tuples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = periods as i64;
    let top = (bound * periods as f64) as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..tuples {
        let mut draw = || rng.random_range(-top..=top) as f64 / r as f64;
        let (xi, xi1, xi3) = (draw(), draw(), draw());
        let xi2 = xi1 + xi3 - xi;
        let scale = (xi * xi + xi1 * xi1 + xi2 * xi2 + xi3 * xi3).max(1.0);
        let gap = (phase_mismatch(xi, xi1, xi3) - phase_mismatch_expanded(xi, xi1, xi3)).abs();
        worst = worst.max(gap / scale);
    }
    worst
}

pub fn illposedness(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let n_max = max_of(&c.n_list);
    rep.at_most(
        "tuples=1000",
        "chi_factorization_error",
        factorization_error(c.periods, n_max, 1000, c.seed),
        th.factorization,
    );
    let points: Vec<CoreResult<IllPoint>> = c.n_list.par_iter().map(|&n| illposed_point(c, n)).collect();
    let mut combos = Vec::new();
    for &t in &c.t_list {
        for &p in &c.p_list {
            for &q in &c.q_list {
                for &s in &c.s_list {
                    combos.push((t, p, q, s));
                }
            }
        }
    }
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); combos.len()];
    for (&n, point) in c.n_list.iter().zip(points) {
        let case = format!("N={n}");
        match point {
            Err(e) => rep.error(&case, "first_iterate", &e),
            Ok(pt) => {
                rep.at_most(&case, "closed_form_vs_duhamel", pt.crosscheck, th.crosscheck);
                if pt.crosscheck > th.crosscheck {
                    continue;
                }
                for (i, (&(t, p, q, s), r)) in combos.iter().zip(&pt.ratios).enumerate() {
                    let case = format!("N={n},t={t},p={},q={},s={s}", fmt_exp(p), fmt_exp(q));
                    rep.info(&case, "ratio", *r);
                    series[i].push((n, *r));
                }
            }
        }
    }
    for ((t, p, q, s), pts) in combos.into_iter().zip(series) {
        let case = format!("t={t},p={},q={},s={s}", fmt_exp(p), fmt_exp(q));
        if pts.len() < 2 {
            rep.error(&case, "ratio_slope", &"fewer than two usable N");
            continue;
        }
        let (ns, rs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let fit = loglog_fit(&ns, &rs);
        rep.fit(&format!("ratio_slope[{case}]"), fit.slope);
        if s < 0.0 {
            rep.at_least(&case, "ratio_slope", fit.slope, th.growth_slope_min);
        } else if s == 0.0 {
            rep.check(&case, "ratio_slope", fit.slope, -th.control_slope_band, th.control_slope_band);
        } else {
            rep.info(&case, "ratio_slope", fit.slope);
        }
        rep.info(&case, "ratio_slope_residual", fit.residual);
    }
}

fn sup_norm(f: &Field) -> f64 {
    f.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn dispersion(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let setup = || -> CoreResult<(Grid, Field, WindowFamily)> {
        let grid = Grid::new(c.periods, c.points)?;
        let f = c.data.build(&grid)?;
        let fam = family(&grid)?;
        fam.check_tail(&f)?;
        Ok((grid, f, fam))
    };
    let (_, f, fam) = match setup() {
        Ok(s) => s,
        Err(e) => return rep.error("setup", "tail_guard", &e),
    };
    let evolved: Vec<Field> = c.t_list.par_iter().map(|&t| free_evolve(&f, t)).collect();

    for &q in &c.q_list {
        let base = fam.mod_norm(&f, ModParams { p: 2.0, q, s: 0.0 });
        let rows: Vec<CoreResult<f64>> = evolved
            .par_iter()
            .map(|g| Ok(fam.mod_norm(g, ModParams { p: 2.0, q, s: 0.0 })? / *base.as_ref().map_err(Clone::clone)?))
            .collect();
        for (&t, r) in c.t_list.iter().zip(rows) {
            let case = format!("p=2,q={},t={t}", fmt_exp(q));
            match r {
                Ok(r) => rep.at_most(&case, "invariance_error", (r - 1.0).abs(), th.invariance),
                Err(e) => rep.error(&case, "invariance_error", &e),
            }
        }
    }

    let l1 = f.lp_norm(1.0).unwrap_or(f64::NAN);
    let mut ts = Vec::new();
    let mut decay = Vec::new();
    for (&t, g) in c.t_list.iter().zip(&evolved) {
        let r = sup_norm(g) / l1;
        rep.info(&format!("t={t}"), "linf_over_l1", r);
        if (1.0..=10.0).contains(&t) {
            ts.push(t);
            decay.push(r);
        }
    }
    if ts.len() >= 2 {
        let fit = loglog_fit(&ts, &decay);
        rep.fit("linf_decay_exponent", fit.slope);
        rep.check(
            "t in [1,10]",
            "linf_decay_exponent",
            fit.slope,
            th.decay_exponent - th.decay_band,
            th.decay_exponent + th.decay_band,
        );
    } else {
        rep.error("t in [1,10]", "linf_decay_exponent", &"fewer than two times in [1, 10]");
    }

    for &p in &c.p_list {
        let params = ModParams { p, q: 1.0, s: 0.0 };
        let case = format!("p={},q=1", fmt_exp(p));
        let ratios: CoreResult<Vec<f64>> = (|| {
            let base = fam.mod_norm(&f, params)?;
            evolved
                .par_iter()
                .map(|g| Ok(fam.mod_norm(g, params)? / base))
                .collect()
        })();
        let ratios = match ratios {
            Ok(r) => r,
            Err(e) => {
                rep.error(&case, "growth", &e);
                continue;
            }
        };
        let xs: Vec<f64> = c.t_list.iter().map(|t| 1.0 + t).collect();
        let exponent = (0.5f64).max((0.5 - 1.0 / p).abs());
        let normalized: Vec<f64> = ratios.iter().zip(&xs).map(|(r, x)| r / x.powf(exponent)).collect();
        for (&t, r) in c.t_list.iter().zip(&ratios) {
            rep.info(&format!("{case},t={t}"), "growth_ratio", *r);
        }
        let constant = max_of(&normalized);
        let growth = loglog_fit(&xs, &ratios).slope;
        rep.fit(&format!("growth_constant[{case}]"), constant);
        rep.fit(&format!("growth_exponent[{case}]"), growth);
        rep.info(&case, "growth_constant", constant);
        rep.at_most(&case, "growth_constant_trend", max_trend(&xs, &normalized), th.trend_slope);
        if p.is_infinite() {
            rep.at_most(&case, "growth_exponent", growth, th.growth_exponent_max);
        } else {
            rep.info(&case, "growth_exponent", growth);
        }
    }
}

/// `ψ(λ·)` on `grid`, as `λ⁻¹` times the rescaled field `λψ(λx)`.
fn dilate(psi: &Field, lambda: f64, grid: &Grid) -> CoreResult<Field> {
    Ok(rescale(psi, 1.0 / lambda, grid)?.scaled_real(1.0 / lambda))
}

/// Scaling exponents for `q`: `(e_up, e_low)` of the small-λ bounds
/// `‖ψ(λ·)‖ ≲ λ^{e_up}‖ψ‖` and `‖ψ(λ·)‖ ≳ λ^{e_low}‖ψ‖`.
fn small_lambda_exponents(q: f64) -> (f64, f64) {
    let dual = 1.0 / q - 1.0;
    if q <= 2.0 {
        (-0.5, dual)
    } else {
        (dual, -0.5)
    }
}

/// Exponents of the large-λ bounds `‖ψ‖ ≲ λ^{e_up}‖ψ(λ·)‖` and `‖ψ‖ ≳ λ^{e_low}‖ψ(λ·)‖`.
fn large_lambda_exponents(q: f64) -> (f64, f64) {
    let dual = 1.0 - 1.0 / q;
    if q <= 2.0 {
        (0.5, dual)
    } else {
        (dual, 0.5)
    }
}

pub fn scaling(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let grids = (|| -> CoreResult<(Grid, Grid)> {
        Ok((
            Grid::new(c.periods, c.points)?,
            Grid::new(4 * c.periods, 2 * c.points)?,
        ))
    })();
    let (up_grid, down_grid) = match grids {
        Ok(g) => g,
        Err(e) => return rep.error("setup", "grid", &e),
    };
    let factors: Vec<f64> = c.lambda_list.iter().map(|&l| l.max(1.0 / l)).collect();
    for (pi, psi_spec) in c.psi_list.iter().enumerate() {
        for &q in &c.q_list {
            for (branch, grid) in [("large", &up_grid), ("small", &down_grid)] {
                let params = ModParams { p: 2.0, q, s: 0.0 };
                let points: Vec<CoreResult<(f64, f64)>> = factors
                    .par_iter()
                    .map(|&big| {
                        let lambda = if branch == "large" { big } else { 1.0 / big };
                        let fam = family(grid)?;
                        let psi = psi_spec.build(grid)?;
                        let dilated = dilate(&psi, lambda, grid)?;
                        let a = fam.mod_norm(&psi, params)?;
                        let b = fam.mod_norm(&dilated, params)?;
                        if branch == "large" {
                            let (eu, el) = large_lambda_exponents(q);
                            Ok((a / (lambda.powf(eu) * b), lambda.powf(el) * b / a))
                        } else {
                            let (eu, el) = small_lambda_exponents(q);
                            Ok((b / (lambda.powf(eu) * a), lambda.powf(el) * a / b))
                        }
                    })
                    .collect();
                let mut xs = Vec::new();
                let mut upper = Vec::new();
                let mut lower = Vec::new();
                for (&big, pt) in factors.iter().zip(points) {
                    let case = format!("psi={pi},q={},branch={branch},scale={big}", fmt_exp(q));
                    match pt {
                        Ok((u, l)) => {
                            rep.info(&case, "upper_bound_ratio", u);
                            rep.info(&case, "lower_bound_ratio", l);
                            xs.push(big);
                            upper.push(u);
                            lower.push(l);
                        }
                        Err(e @ (modlab::Error::BandwidthOverflow(_) | modlab::Error::TailTooHeavy { .. })) => {
                            rep.skip(&case, "scaling_ratio", &e.to_string())
                        }
                        Err(e) => rep.error(&case, "scaling_ratio", &e),
                    }
                }
                let case = format!("psi={pi},q={},branch={branch}", fmt_exp(q));
                for (name, ratios) in [("upper", &upper), ("lower", &lower)] {
                    if ratios.is_empty() {
                        rep.skip(&case, &format!("{name}_constant"), "no usable scale factors");
                        continue;
                    }
                    let constant = max_of(ratios);
                    rep.fit(&format!("{name}_constant[{case}]"), constant);
                    rep.info(&case, &format!("{name}_constant"), constant);
                    rep.at_most(&case, &format!("{name}_trend"), max_trend(&xs, ratios), th.trend_slope);
                }
            }
        }
    }
    random_families(c, &up_grid, rep);
}

/// Embedding, bilinear and norm-equivalence constants over seeded random fields.
fn random_families(c: &ScanConfig, grid: &Grid, rep: &mut Report) {
    let th = &c.thresholds;
    let fam = match family(grid) {
        Ok(f) => f,
        Err(e) => return rep.error("families", "setup", &e),
    };
    let field = |i: usize| TestFunction::random_schwartz(c.amplitude, c.seed.wrapping_add(i as u64)).build(grid);
    let m = |p: f64, q: f64, s: f64| ModParams { p, q, s };
    type Ratio<'a> = Box<dyn Fn(usize) -> CoreResult<f64> + Sync + 'a>;
    let families: Vec<(&str, Ratio)> = vec![
        (
            "embedding M11 in M22",
            Box::new(|i| {
                let f = field(i)?;
                Ok(fam.mod_norm(&f, m(2.0, 2.0, 0.0))? / fam.mod_norm(&f, m(1.0, 1.0, 0.0))?)
            }),
        ),
        (
            "embedding M22^1 in M21",
            Box::new(|i| {
                let f = field(i)?;
                Ok(fam.mod_norm(&f, m(2.0, 1.0, 0.0))? / fam.mod_norm(&f, m(2.0, 2.0, 1.0))?)
            }),
        ),
        (
            "bilinear M21 x Minf1 x M21",
            Box::new(|i| {
                let (f, g) = (field(2 * i)?, field(2 * i + 1)?);
                fam.bilinear_ratio(&f, &g, m(2.0, 1.0, 0.0), m(f64::INFINITY, 1.0, 0.0), m(2.0, 1.0, 0.0))
            }),
        ),
        (
            "algebra Minf1",
            Box::new(|i| {
                let (f, g) = (field(2 * i)?, field(2 * i + 1)?);
                fam.bilinear_ratio(&f, &g, m(f64::INFINITY, 1.0, 0.0), m(f64::INFINITY, 1.0, 0.0), m(f64::INFINITY, 1.0, 0.0))
            }),
        ),
    ];
    for (name, ratio) in &families {
        let values: CoreResult<Vec<f64>> = (0..c.members).into_par_iter().map(ratio).collect();
        match values {
            Ok(v) => {
                let constant = max_of(&v);
                rep.fit(&format!("constant[{name}]"), constant);
                rep.info(name, "constant", constant);
                rep.at_most(name, "trend", seed_trend(&v), th.trend_slope);
            }
            Err(e) => rep.error(name, "constant", &e),
        }
    }
    type Bracket<'a> = Box<dyn Fn(&Field) -> CoreResult<f64> + Sync + 'a>;
    let brackets: Vec<(&str, Bracket)> = vec![
        ("mh(theta=-1.5,q=1)/M21", Box::new(|f| fam.mh_norm(f, -1.5, 1.0))),
        ("tilde(q=1)/M21", Box::new(|f| fam.tilde_norm(f, 1.0))),
    ];
    for (name, norm) in &brackets {
        let values: CoreResult<Vec<f64>> = (0..c.members)
            .into_par_iter()
            .map(|i| {
                let f = field(i)?;
                Ok(norm(&f)? / fam.mod_norm(&f, m(2.0, 1.0, 0.0))?)
            })
            .collect();
        match values {
            Ok(v) => {
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = max_of(&v);
                rep.check(name, "bracket_min", lo, th.bracket_low, th.bracket_high);
                rep.check(name, "bracket_max", hi, th.bracket_low, th.bracket_high);
            }
            Err(e) => rep.error(name, "bracket", &e),
        }
    }
}

/// `max_t |m(t) - m(0)| / m(0)` of the mass along a trajectory.
pub fn mass_drift(traj: &Trajectory) -> f64 {
    let m0 = traj.state(0).mass();
    traj.states()
        .iter()
        .map(|s| (s.mass() - m0).abs() / m0)
        .fold(0.0, f64::max)
}

pub fn mass_rows(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    for sign in [Sign::Defocusing, Sign::Focusing] {
        let case = format!("sign={},T={}", sign.name(), c.final_time);
        let run = (|| -> CoreResult<f64> {
            let grid = Grid::new(c.periods, c.points)?;
            let u0 = c.data.build(&grid)?;
            let cfg = SolverConfig::new(sign, c.final_time, c.steps).recording(c.record_every);
            Ok(mass_drift(&solve_nls(&u0, &cfg)?))
        })();
        match run {
            Ok(d) => rep.at_most(&case, "mass_drift", d, th.mass_drift),
            Err(e) => rep.error(&case, "mass_drift", &e),
        }
    }
}

/// Largest relative change of the full conserved quantity over the recorded frames.
fn alpha_drift(u0: &Field, kappa: f64, cfg: &SolverConfig) -> CoreResult<f64> {
    let traj = solve_nls(u0, cfg)?;
    let values = traj
        .states()
        .par_iter()
        .map(|s| Ok(alpha_full(s, kappa, cfg.sign)?.alpha_full))
        .collect::<CoreResult<Vec<f64>>>()?;
    let a0 = values[0];
    Ok(values.iter().map(|a| (a - a0).abs() / a0.abs()).fold(0.0, f64::max))
}

pub fn alpha_rows(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let grid = match Grid::new(c.periods, c.points) {
        Ok(g) => g,
        Err(e) => return rep.error("setup", "grid", &e),
    };
    let u0 = match c.data.build(&grid) {
        Ok(u) => u,
        Err(e) => return rep.error("setup", "data", &e),
    };
    for sign in [Sign::Defocusing, Sign::Focusing] {
        for &kappa in &c.kappa_list {
            let case = format!("sign={},kappa={kappa}", sign.name());
            let coarse = SolverConfig::new(sign, c.final_time, c.steps).recording(c.record_every);
            let fine = SolverConfig::new(sign, c.final_time, 2 * c.steps).recording(2 * c.record_every);
            let (a, b) = rayon::join(|| alpha_drift(&u0, kappa, &coarse), || alpha_drift(&u0, kappa, &fine));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    rep.at_most(&case, "alpha_drift", a, th.alpha_drift);
                    rep.info(&case, "alpha_drift_half_step", b);
                    rep.check(&case, "alpha_drift_ratio", a / b, th.ratio_low, th.ratio_high);
                }
                (Err(e), _) | (_, Err(e)) => rep.error(&case, "alpha_drift", &e),
            }
        }
    }
}

/// Family constant of `sup_t ‖u(t)‖_{M21} ≤ C(1 + ‖u₀‖)‖u₀‖` with `‖u₀‖_{M21}` spread over `[0.05, 0.5]`.
pub fn apriori_rows(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let setup = (|| -> CoreResult<(Grid, WindowFamily)> {
        let grid = Grid::new(c.periods, c.points)?;
        let fam = family(&grid)?;
        Ok((grid, fam))
    })();
    let (grid, fam) = match setup {
        Ok(s) => s,
        Err(e) => return rep.error("setup", "apriori", &e),
    };
    let m21 = ModParams { p: 2.0, q: 1.0, s: 0.0 };
    let n = c.members;
    let targets: Vec<f64> = (0..n)
        .map(|i| if n == 1 { 0.5 } else { 0.05 + 0.45 * i as f64 / (n - 1) as f64 })
        .collect();
    let results: Vec<CoreResult<f64>> = targets
        .par_iter()
        .enumerate()
        .map(|(i, &target)| {
            let raw = TestFunction::random_schwartz(1.0, c.seed.wrapping_add(i as u64)).build(&grid)?;
            let u0 = raw.scaled_real(target / fam.mod_norm(&raw, m21)?);
            let cfg = SolverConfig::new(c.sign, c.final_time, c.steps).recording(c.record_every);
            let traj = solve_nls(&u0, &cfg)?;
            let sup = traj
                .states()
                .iter()
                .map(|s| fam.mod_norm(s, m21))
                .collect::<CoreResult<Vec<f64>>>()?;
            let n0 = fam.mod_norm(&u0, m21)?;
            Ok(max_of(&sup) / ((1.0 + n0) * n0))
        })
        .collect();
    let mut ok = Vec::new();
    for (&target, r) in targets.iter().zip(results) {
        let case = format!("norm={target:.4}");
        match r {
            Ok(v) => {
                rep.info(&case, "apriori_ratio", v);
                ok.push((target, v));
            }
            Err(e) => rep.error(&case, "apriori_ratio", &e),
        }
    }
    if ok.is_empty() {
        return;
    }
    let (xs, vs): (Vec<f64>, Vec<f64>) = ok.into_iter().unzip();
    let constant = max_of(&vs);
    rep.fit("apriori_constant", constant);
    rep.at_most("family", "apriori_constant", constant, th.apriori_max);
    rep.at_most("family", "apriori_trend", max_trend(&xs, &vs), th.trend_slope);
}

pub fn conservation(c: &ScanConfig, rep: &mut Report) {
    mass_rows(c, rep);
    alpha_rows(c, rep);
    let mut family_cfg = c.clone();
    family_cfg.members = c.members.min(10);
    apriori_rows(&family_cfg, rep);
}

pub fn gwp(c: &ScanConfig, rep: &mut Report) {
    let th = &c.thresholds;
    let run = (|| -> CoreResult<_> {
        let grid = Grid::new(c.periods, c.points)?;
        let u0 = c.data.build(&grid)?;
        let cfg = SolverConfig::new(c.sign, c.final_time, c.steps).recording(c.record_every);
        let report = track_gwp(&u0, c.depth, &cfg)?;
        let slices = c.steps / c.record_every;
        let p = picard_iterates(&u0, c.depth, c.final_time, slices, c.sign)?;
        let tilde = build_tilde_u(&p).last().clone();
        let g = source_g(&p)?.last().clone();
        let ratios = (0..c.members)
            .into_par_iter()
            .map(|i| {
                // Random shapes at a common L² size `amplitude`.
                let raw = TestFunction::random_schwartz(1.0, c.seed.wrapping_add(i as u64)).build(&grid)?;
                let v = raw.scaled_real(c.amplitude / raw.l2_norm());
                let h = hamiltonian(&v, &tilde, &g)?;
                Ok(sandwich_ratios(energy(&v), h, v.mass()))
            })
            .collect::<CoreResult<Vec<(f64, f64)>>>()?;
        Ok((report, ratios))
    })();
    let (report, ratios) = match run {
        Ok(r) => r,
        Err(e) => return rep.error("track", "gwp", &e),
    };
    let case = format!("depth={},T={}", c.depth, c.final_time);
    rep.check(&case, "v0_norm", report.rows[0].mass_v.sqrt(), 0.0, 0.0);
    rep.info(&case, "split_error", report.split_error);
    rep.at_most(&case, "mass_drift", report.max_mass_drift(), th.mass_drift);
    let lower: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let upper: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    for (i, (l, u)) in ratios.iter().enumerate() {
        rep.info(&format!("{case},member={i}"), "sandwich_lower_ratio", *l);
        rep.info(&format!("{case},member={i}"), "sandwich_upper_ratio", *u);
    }
    let c1 = max_of(&lower).max(0.0);
    let c2 = c1 * max_of(&upper);
    rep.fit("sandwich_c1", c1);
    rep.fit("sandwich_c2", c2);
    rep.info(&case, "sandwich_c1", c1);
    rep.info(&case, "sandwich_c2", c2);
    rep.at_most(&case, "sandwich_lower_trend", seed_trend(&lower), th.trend_slope);
    rep.at_most(&case, "sandwich_upper_trend", seed_trend(&upper), th.trend_slope);
    let ts: Vec<f64> = report.rows.iter().map(|r| r.t).collect();
    let logs: Vec<f64> = report
        .rows
        .iter()
        .map(|r| (r.hamiltonian + c1 * r.mass_v + 1.0).ln())
        .collect();
    let fit = linear_fit(&ts, &logs);
    rep.fit("gronwall_rate", fit.slope);
    rep.fit("gronwall_residual", fit.residual);
    if report.diagnostic_only {
        rep.info(&case, "gronwall_rate", fit.slope);
        rep.info(&case, "gronwall_residual", fit.residual);
    } else {
        rep.at_least(&case, "gronwall_rate", fit.slope, 0.0);
        rep.at_most(&case, "gronwall_residual", fit.residual, th.gronwall_residual);
    }
}

pub fn norm(c: &ScanConfig, rep: &mut Report) {
    let run = (|| -> CoreResult<(Field, WindowFamily)> {
        let grid = Grid::new(c.periods, c.points)?;
        let f = c.data.build(&grid)?;
        let fam = family(&grid)?;
        Ok((f, fam))
    })();
    let (f, fam) = match run {
        Ok(r) => r,
        Err(e) => return rep.error("setup", "norm", &e),
    };
    for &p in &c.p_list {
        for &q in &c.q_list {
            for &s in &c.s_list {
                let case = format!("p={},q={},s={s}", fmt_exp(p), fmt_exp(q));
                match fam.mod_norm(&f, ModParams { p, q, s }) {
                    Ok(v) => rep.info(&case, "mod_norm", v),
                    Err(e) => rep.error(&case, "mod_norm", &e),
                }
            }
        }
    }
    rep.info("L2", "l2_norm", f.l2_norm());
}

pub fn evolve(c: &ScanConfig, rep: &mut Report) {
    let run = (|| -> CoreResult<Trajectory> {
        let grid = Grid::new(c.periods, c.points)?;
        let u0 = c.data.build(&grid)?;
        solve_nls(&u0, &SolverConfig::new(c.sign, c.final_time, c.steps).recording(c.record_every))
    })();
    let case = format!("sign={},T={}", c.sign.name(), c.final_time);
    match run {
        Ok(traj) => {
            rep.at_most(&case, "mass_drift", mass_drift(&traj), c.thresholds.mass_drift);
            for (i, s) in traj.states().iter().enumerate() {
                let case = format!("t={}", traj.time(i));
                rep.info(&case, "l2_norm", s.l2_norm());
                rep.info(&case, "sup_norm", sup_norm(s));
            }
        }
        Err(e) => rep.error(&case, "evolve", &e),
    }
}

pub fn picard(c: &ScanConfig, rep: &mut Report) {
    let run = (|| -> CoreResult<()> {
        let grid = Grid::new(c.periods, c.points)?;
        let u0 = c.data.build(&grid)?;
        let p = picard_iterates(&u0, c.depth, c.final_time, c.slices, c.sign)?;
        let gamma = 0.7;
        let q = picard_iterates(&u0.scaled_real(gamma), c.depth, c.final_time, c.slices, c.sign)?;
        for n in 1..=c.depth {
            let case = format!("n={n}");
            let a = p.iterate(n);
            if n % 2 == 0 {
                rep.check(&case, "even_iterate_norm", a.linf_l2_norm(), 0.0, 0.0);
                continue;
            }
            rep.info(&case, "iterate_norm", a.linf_l2_norm());
            let scaled = a.scaled(Complex64::new(gamma.powi(n as i32), 0.0));
            let err = q.iterate(n).linf_l2_distance(&scaled)? / scaled.linf_l2_norm();
            rep.at_most(&case, "homogeneity_error", err, 1e-11);
        }
        let steps = c.slices * 10;
        let u = solve_nls(&u0, &SolverConfig::new(c.sign, c.final_time, steps).recording(10))?;
        rep.info("sum", "remainder", u.linf_l2_distance(&build_tilde_u(&p))?);
        Ok(())
    })();
    if let Err(e) = run {
        rep.error("picard", "iterates", &e);
    }
}

pub fn alpha(c: &ScanConfig, rep: &mut Report) {
    let run = (|| -> CoreResult<Field> {
        let grid = Grid::new(c.periods, c.points)?;
        c.data.build(&grid)
    })();
    let u0 = match run {
        Ok(u) => u,
        Err(e) => return rep.error("setup", "alpha", &e),
    };
    for &kappa in &c.kappa_list {
        let case = format!("sign={},kappa={kappa}", c.sign.name());
        match alpha_full(&u0, kappa, c.sign) {
            Ok(r) => {
                rep.info(&case, "alpha2", r.alpha2);
                rep.info(&case, "alpha4", r.alpha4);
                rep.info(&case, "alpha_full", r.alpha_full);
                rep.info(&case, "raw_log_det", r.raw_log_det);
                rep.check(&case, "spectral_radius", r.spectral_radius, 0.0, 1.0);
                rep.info(&case, "tail_bound", r.tail_bound);
            }
            Err(e) => rep.error(&case, "alpha", &e),
        }
        let cfg = SolverConfig::new(c.sign, c.final_time, c.steps).recording(c.record_every);
        match alpha_drift(&u0, kappa, &cfg) {
            Ok(d) => rep.at_most(&case, "alpha_drift", d, c.thresholds.alpha_drift),
            Err(e) => rep.error(&case, "alpha_drift", &e),
        }
    }
}
