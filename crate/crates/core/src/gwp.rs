//! Splitting `u = ũ + v` into finitely many Picard iterates plus a remainder:
//! the source `G`, the high-homogeneity remainder `R`, the time-dependent
//! Hamiltonian `H(t,v)`, the energy `E(v)` and a tracker for their growth.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, max_of, LineFit};
use crate::nls::{picard_iterates, solve_nls, PicardSet, Sign, SolverConfig};
use crate::spectral::{Field, Trajectory};

/// `ũ = Σ_{k odd ≤ depth} A_k`.
pub fn build_tilde_u(p: &PicardSet) -> Trajectory {
    let mut acc = p.iterate(1).clone();
    for k in (3..=p.depth()).step_by(2) {
        acc = acc.add(p.iterate(k)).expect("common slab");
    }
    acc
}

fn slice_sums(p: &PicardSet, keep: impl Fn(usize) -> bool + Sync) -> Result<Trajectory> {
    let slab = p.slab();
    let grid = slab.grid().clone();
    let states = (0..slab.len())
        .into_par_iter()
        .map(|j| Field::from_spectrum(&grid, p.triple_sum(j, &keep)))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(slab.start(), slab.step(), states)
}

/// `G = Σ_{k=3}^{depth} Σ_{k₁+k₂+k₃=k} A_{k₁} Ā_{k₂} A_{k₃}`, so that `i ũ_t + ũ_xx = ±2G`.
pub fn source_g(p: &PicardSet) -> Result<Trajectory> {
    let depth = p.depth();
    slice_sums(p, |k| k <= depth)
}

/// `R = |ũ|²ũ - G`: the triples of total homogeneity above `depth`.
pub fn remainder_r(p: &PicardSet) -> Result<Trajectory> {
    let depth = p.depth();
    slice_sums(p, |k| k > depth)
}

fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid() != b.grid() {
        Err(Error::GridMismatch)
    } else {
        Ok(())
    }
}

fn kinetic(v: &Field) -> f64 {
    0.5 * v.derivative().mass()
}

/// `H(t,v) = ∫ ½|v_x|² + ¼(|v + ũ|⁴ - |ũ|⁴ - 4 Re(v̄ G)) dx`.
pub fn hamiltonian(v: &Field, tilde_u: &Field, g: &Field) -> Result<f64> {
    check_same_grid(v, tilde_u)?;
    check_same_grid(v, g)?;
    let dx = v.grid().dx();
    let potential: f64 = v
        .values()
        .iter()
        .zip(tilde_u.values())
        .zip(g.values())
        .map(|((&a, &b), &c)| {
            let s = (a + b).norm_sqr();
            let u = b.norm_sqr();
            s * s - u * u - 4.0 * (a.conj() * c).re
        })
        .sum::<f64>()
        * dx;
    Ok(kinetic(v) + 0.25 * potential)
}

/// `E(v) = ∫ ½|v_x|² + ¼|v|⁴ dx`.
pub fn energy(v: &Field) -> f64 {
    let quartic: f64 = v.values().iter().map(|a| a.norm_sqr().powi(2)).sum::<f64>() * v.grid().dx();
    kinetic(v) + 0.25 * quartic
}

/// Ratios `(E + m)/(H + m + 1)` and `(H + m + 1)/(E + m + 1)` with `m = ‖v‖²`.
pub fn sandwich_ratios(energy: f64, hamiltonian: f64, mass: f64) -> (f64, f64) {
    let lower = (energy + mass) / (hamiltonian + mass + 1.0);
    let upper = (hamiltonian + mass + 1.0) / (energy + mass + 1.0);
    (lower, upper)
}

/// Sandwich constants `C₁ = max lower`, `C₂ = C₁ · max upper`.
pub fn sandwich_constants(ratios: &[(f64, f64)]) -> (f64, f64) {
    let lower: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let upper: Vec<f64> = ratios.iter().map(|r| r.1).collect();
    let c1 = max_of(&lower).max(0.0);
    (c1, c1 * max_of(&upper))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwpRow {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub energy: f64,
    pub hamiltonian: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GwpReport {
    pub depth: usize,
    pub sign: Sign,
    pub step: f64,
    pub rows: Vec<GwpRow>,
    pub c1: f64,
    pub c2: f64,
    /// Least-squares fit of `log(H + C₁‖v‖² + 1)` against `t`.
    pub growth: LineFit,
    /// Largest `|u - (ũ + v)|` over slices.
    pub split_error: f64,
    /// Focusing runs are recorded but the Hamiltonian control does not apply.
    pub diagnostic_only: bool,
}

impl GwpReport {
    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.rows[0].mass_u;
        self.rows
            .iter()
            .map(|r| (r.mass_u - m0).abs() / m0)
            .fold(0.0, f64::max)
    }
}

/// Solve for `u`, build `ũ` from the Picard iterates on the recorded slab, set
/// `v = u - ũ` and record the energies along the way.
pub fn track_gwp(u0: &Field, depth: usize, cfg: &SolverConfig) -> Result<GwpReport> {
    let u = solve_nls(u0, cfg)?;
    let slices = cfg.steps / cfg.record_every;
    let p = picard_iterates(u0, depth, cfg.final_time, slices, cfg.sign)?;
    let tilde = build_tilde_u(&p);
    let g = source_g(&p)?;
    let v = u.sub(&tilde)?;
    let split_error = (0..u.len())
        .map(|i| {
            let back = tilde.state(i).add(v.state(i)).expect("same grid");
            back.max_abs_diff(u.state(i)).expect("same grid")
        })
        .fold(0.0, f64::max);
    let rows = (0..u.len())
        .into_par_iter()
        .map(|i| {
            let vi = v.state(i);
            let h = hamiltonian(vi, tilde.state(i), g.state(i))?;
            let e = energy(vi);
            let m = vi.mass();
            let (lower, upper) = sandwich_ratios(e, h, m);
            Ok(GwpRow {
                t: u.time(i),
                mass_u: u.state(i).mass(),
                mass_v: m,
                energy: e,
                hamiltonian: h,
                lower_ratio: lower,
                upper_ratio: upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<(f64, f64)> = rows.iter().map(|r| (r.lower_ratio, r.upper_ratio)).collect();
    let (c1, c2) = sandwich_constants(&ratios);
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let logs: Vec<f64> = rows
        .iter()
        .map(|r| (r.hamiltonian + c1 * r.mass_v + 1.0).max(f64::MIN_POSITIVE).ln())
        .collect();
    Ok(GwpReport {
        depth,
        sign: cfg.sign,
        step: cfg.step(),
        rows,
        c1,
        c2,
        growth: linear_fit(&ts, &logs),
        split_error,
        diagnostic_only: cfg.sign == Sign::Focusing,
    })
}

/// `|ũ|²ũ` on every slice, dealiased.
pub fn cubic_of_tilde(p: &PicardSet) -> Result<Trajectory> {
    let tilde = build_tilde_u(p);
    let grid = tilde.grid().clone();
    let states = tilde
        .states()
        .par_iter()
        .map(|s| {
            let spec = s.spectrum();
            Field::from_spectrum(&grid, grid.cubic_product(spec, spec, spec))
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(tilde.start(), tilde.step(), states)
}

/// `i ũ_t + ũ_xx - 2σG` at interior slices, with centered differences in time and
/// spectral second derivatives; returns the largest `L²` residual.
pub fn source_residual(p: &PicardSet) -> Result<f64> {
    let tilde = build_tilde_u(p);
    let g = source_g(p)?;
    let dt = tilde.step();
    let coeff = 2.0 * p.sign().value();
    let mut worst: f64 = 0.0;
    for j in 1..tilde.len().saturating_sub(1) {
        let dtu = tilde.state(j + 1).sub(tilde.state(j - 1))?.scaled_real(0.5 / dt);
        let uxx = tilde.state(j).derivative().derivative();
        let lhs = dtu.scaled(Complex64::new(0.0, 1.0)).add(&uxx)?;
        let r = lhs.sub(&g.state(j).scaled_real(coeff))?;
        worst = worst.max(r.l2_norm());
    }
    Ok(worst)
}
