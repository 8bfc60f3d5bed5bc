//! Cubic NLS `i u_t + u_xx = ±2|u|²u`: free propagator, Strang split-step solver,
//! Duhamel operator, Picard iterates, Galilean and scaling transforms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid, Trajectory};

/// Largest supported Picard depth.
pub const MAX_PICARD_DEPTH: usize = 9;

/// Largest allowed solver step.
pub const MAX_STEP: f64 = 0.1;

/// Energy fraction allowed beyond three quarters of Nyquist in solver input.
pub const SOLVER_TAIL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Focusing,
    Defocusing,
}

impl Sign {
    /// Coefficient `σ` in `i u_t + u_xx = 2σ|u|²u`.
    pub fn value(self) -> f64 {
        match self {
            Sign::Focusing => -1.0,
            Sign::Defocusing => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Focusing => "focusing",
            Sign::Defocusing => "defocusing",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub sign: Sign,
    pub final_time: f64,
    pub steps: usize,
    /// Store every `record_every`-th step; must divide `steps`.
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

impl SolverConfig {
    pub fn new(sign: Sign, final_time: f64, steps: usize) -> Self {
        Self {
            sign,
            final_time,
            steps,
            record_every: 1,
        }
    }

    pub fn recording(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn step(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.final_time > 0.0) || !self.final_time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "solver needs T > 0 and at least one step, got T = {}, S = {}",
                self.final_time, self.steps
            )));
        }
        if self.step() > MAX_STEP {
            return Err(Error::InvalidParameter(format!(
                "time step {} exceeds {MAX_STEP}",
                self.step()
            )));
        }
        if self.record_every == 0 || !self.steps.is_multiple_of(self.record_every) {
            return Err(Error::InvalidParameter(format!(
                "record_every = {} does not divide {} steps",
                self.record_every, self.steps
            )));
        }
        Ok(())
    }
}

/// Multiplier `e^{-itξ²}` in storage order.
fn propagator(grid: &Grid, t: f64) -> Vec<Complex64> {
    (0..grid.len())
        .map(|i| {
            let xi = grid.xi(i);
            Complex64::from_polar(1.0, -t * xi * xi)
        })
        .collect()
}

/// `S(t) f`: spectrum multiplied by `e^{-itξ²}`; `S(0)` returns `f` unchanged.
pub fn free_evolve(f: &Field, t: f64) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    f.apply_multiplier(|xi| Complex64::from_polar(1.0, -t * xi * xi))
}

/// `S(t_i) f` on the slab `t_i = i·T/S`, `i = 0..=S`.
pub fn free_trajectory(f: &Field, final_time: f64, slices: usize) -> Result<Trajectory> {
    let step = slab_step(final_time, slices)?;
    let states = (0..=slices)
        .into_par_iter()
        .map(|i| free_evolve(f, i as f64 * step))
        .collect();
    Trajectory::new(0.0, step, states)
}

fn slab_step(final_time: f64, slices: usize) -> Result<f64> {
    if slices == 0 || !(final_time > 0.0) || !final_time.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "slab needs T > 0 and at least one slice, got T = {final_time}, S = {slices}"
        )));
    }
    Ok(final_time / slices as f64)
}

fn check_solver_input(u0: &Field) -> Result<()> {
    let cutoff = 0.75 * u0.grid().nyquist();
    let fraction = u0.spectral_tail_fraction(cutoff);
    if fraction >= SOLVER_TAIL_TOLERANCE {
        return Err(Error::TailTooHeavy { cutoff, fraction });
    }
    if !u0.is_finite() {
        return Err(Error::NonFiniteState { step: 0 });
    }
    Ok(())
}

fn nonlinear_phase(values: &mut [Complex64], coeff: f64) {
    for v in values.iter_mut() {
        *v *= Complex64::from_polar(1.0, coeff * v.norm_sqr());
    }
}

/// Strang split-step solution of `i u_t + u_xx = ±2|u|²u`.
pub fn solve_nls(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_solver_input(u0)?;
    let grid = u0.grid().clone();
    let dt = cfg.step();
    let linear = propagator(&grid, dt);
    // Half-step phase: u ↦ u·e^{-2iσ|u|² dt/2}.
    let half = -cfg.sign.value() * dt;
    let mut states = Vec::with_capacity(cfg.steps / cfg.record_every + 1);
    states.push(u0.clone());
    let mut values = u0.values().to_vec();
    for step in 1..=cfg.steps {
        nonlinear_phase(&mut values, half);
        let mut spec = grid.forward(&values);
        for (s, p) in spec.iter_mut().zip(&linear) {
            *s *= p;
        }
        values = grid.inverse(&spec);
        nonlinear_phase(&mut values, half);
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        if step % cfg.record_every == 0 {
            states.push(Field::from_values(&grid, values.clone())?);
        }
    }
    Trajectory::new(0.0, dt * cfg.record_every as f64, states)
}

/// Integrate source spectra `F̂(τ_j)` into `-2iσ ∫_{t_0}^{t} S(t-τ) F(τ) dτ` on the slab,
/// using the trapezoid rule in the interaction picture.
fn integrate_sources(
    grid: &Grid,
    start: f64,
    step: f64,
    sources: Vec<Vec<Complex64>>,
    sign: Sign,
) -> Result<Trajectory> {
    let coeff = Complex64::new(0.0, -2.0 * sign.value());
    let xi2: Vec<f64> = (0..grid.len()).map(|i| grid.xi(i).powi(2)).collect();
    let pulled: Vec<Vec<Complex64>> = sources
        .into_par_iter()
        .enumerate()
        .map(|(j, mut s)| {
            let tau = start + j as f64 * step;
            for (v, k) in s.iter_mut().zip(&xi2) {
                *v *= Complex64::from_polar(1.0, tau * k);
            }
            s
        })
        .collect();
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut cumulative = Vec::with_capacity(pulled.len());
    cumulative.push(acc.clone());
    for j in 1..pulled.len() {
        for ((a, lo), hi) in acc.iter_mut().zip(&pulled[j - 1]).zip(&pulled[j]) {
            *a += (lo + hi) * (0.5 * step);
        }
        cumulative.push(acc.clone());
    }
    let states = cumulative
        .into_par_iter()
        .enumerate()
        .map(|(j, mut s)| {
            let t = start + j as f64 * step;
            for (v, k) in s.iter_mut().zip(&xi2) {
                *v *= coeff * Complex64::from_polar(1.0, -t * k);
            }
            Field::from_spectrum(grid, s)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(start, step, states)
}

/// `N(u₁,u₂,u₃)(t) = ∓2i ∫_{t_0}^t S(t-τ)(u₁ ū₂ u₃)(τ) dτ` on the common slab,
/// with the sign of the equation (`-2i` defocusing, `+2i` focusing).
pub fn duhamel(u1: &Trajectory, u2: &Trajectory, u3: &Trajectory, sign: Sign) -> Result<Trajectory> {
    if !u1.same_slab(u2) || !u1.same_slab(u3) {
        return Err(Error::SlabMismatch);
    }
    let grid = u1.grid().clone();
    let sources: Vec<Vec<Complex64>> = (0..u1.len())
        .into_par_iter()
        .map(|j| {
            grid.cubic_product(
                u1.state(j).spectrum(),
                u2.state(j).spectrum(),
                u3.state(j).spectrum(),
            )
        })
        .collect();
    integrate_sources(&grid, u1.start(), u1.step(), sources, sign)
}

/// Ordered triples of odd positive integers summing to `n`, lexicographic.
pub fn odd_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for a in (1..n).step_by(2) {
        for b in (1..n).step_by(2) {
            if a + b < n {
                let c = n - a - b;
                if c % 2 == 1 {
                    out.push((a, b, c));
                }
            }
        }
    }
    out
}

/// Homogeneous Picard iterates `A_1, …, A_depth` on a common slab.
#[derive(Clone, Debug)]
pub struct PicardSet {
    u0: Field,
    sign: Sign,
    // iterates[n - 1] = A_n; even entries are zero trajectories.
    iterates: Vec<Trajectory>,
}

impl PicardSet {
    pub fn initial(&self) -> &Field {
        &self.u0
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn depth(&self) -> usize {
        self.iterates.len()
    }

    /// `A_n` for `1 ≤ n ≤ depth`.
    pub fn iterate(&self, n: usize) -> &Trajectory {
        &self.iterates[n - 1]
    }

    pub fn slab(&self) -> &Trajectory {
        &self.iterates[0]
    }

    /// Dealiased spectra of `Σ A_{k₁} Ā_{k₂} A_{k₃}` at slice `j`, over odd triples
    /// `k₁, k₂, k₃ ≤ depth` whose total satisfies `keep`.
    pub fn triple_sum(&self, j: usize, keep: impl Fn(usize) -> bool) -> Vec<Complex64> {
        let grid = self.u0.grid();
        let odd: Vec<usize> = (1..=self.depth()).step_by(2).collect();
        let mut triples = Vec::new();
        for &a in &odd {
            for &b in &odd {
                for &c in &odd {
                    if keep(a + b + c) {
                        triples.push((a, b, c));
                    }
                }
            }
        }
        // Lexicographic in the total first, then in (k₁, k₂, k₃).
        triples.sort_by_key(|&(a, b, c)| (a + b + c, a, b, c));
        if triples.is_empty() {
            return vec![Complex64::new(0.0, 0.0); grid.len()];
        }
        let refs: Vec<(&[Complex64], &[Complex64], &[Complex64])> = triples
            .iter()
            .map(|&(a, b, c)| {
                (
                    self.iterate(a).state(j).spectrum(),
                    self.iterate(b).state(j).spectrum(),
                    self.iterate(c).state(j).spectrum(),
                )
            })
            .collect();
        grid.cubic_sum(&refs)
    }
}

/// Picard iterates of the Duhamel fixed point: `A_1 = S(t)u_0`,
/// `A_n = Σ_{n₁+n₂+n₃=n} N(A_{n₁}, A_{n₂}, A_{n₃})`.
pub fn picard_iterates(
    u0: &Field,
    depth: usize,
    final_time: f64,
    slices: usize,
    sign: Sign,
) -> Result<PicardSet> {
    if depth == 0 || depth > MAX_PICARD_DEPTH || depth.is_multiple_of(2) {
        return Err(Error::DepthTooLarge(depth));
    }
    let first = free_trajectory(u0, final_time, slices)?;
    let grid = u0.grid().clone();
    let mut iterates = vec![first];
    for n in 2..=depth {
        if n % 2 == 0 {
            iterates.push(Trajectory::zeros_like(&iterates[0]));
            continue;
        }
        let triples = odd_triples(n);
        let slab = &iterates[0];
        let sources: Vec<Vec<Complex64>> = (0..slab.len())
            .into_par_iter()
            .map(|j| {
                let refs: Vec<(&[Complex64], &[Complex64], &[Complex64])> = triples
                    .iter()
                    .map(|&(a, b, c)| {
                        (
                            iterates[a - 1].state(j).spectrum(),
                            iterates[b - 1].state(j).spectrum(),
                            iterates[c - 1].state(j).spectrum(),
                        )
                    })
                    .collect();
                grid.cubic_sum(&refs)
            })
            .collect();
        let next = integrate_sources(&grid, slab.start(), slab.step(), sources, sign)?;
        iterates.push(next);
    }
    Ok(PicardSet {
        u0: u0.clone(),
        sign,
        iterates,
    })
}

fn shifted_spectrum(f: &Field, n: i64, t: f64) -> Result<Vec<Complex64>> {
    let grid = f.grid();
    let shift = n * grid.periods() as i64;
    let spec = f.spectrum();
    let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut kept = 0.0;
    let nf = n as f64;
    for (i, slot) in out.iter_mut().enumerate() {
        let m = grid.signed_index(i);
        if let Some(src) = grid.index_of(m + shift) {
            let xi = grid.xi(i);
            // û_n(ξ) = e^{i(2ntξ + n²t)} û(ξ + n)
            *slot = spec[src] * Complex64::from_polar(1.0, t * (2.0 * nf * xi + nf * nf));
            kept += spec[src].norm_sqr();
        }
    }
    if total > 0.0 && (total - kept) / total > 1e-10 {
        return Err(Error::BandwidthOverflow(format!(
            "boost by {n} pushes {:.3e} of the energy past Nyquist",
            (total - kept) / total
        )));
    }
    Ok(out)
}

/// Galilean boost `u_n(x,t) = e^{-inx - in²t} u(x + 2nt, t)` of a slice at time `t`.
/// Its spectrum is `|û_n(ξ)| = |û(ξ + n)|`, and it maps NLS solutions to solutions.
pub fn galilean(f: &Field, n: i64, t: f64) -> Result<Field> {
    if n == 0 {
        return Ok(f.clone());
    }
    Field::from_spectrum(f.grid(), shifted_spectrum(f, n, t)?)
}

/// Galilean boost of every slice of a trajectory, at the slice's own time.
pub fn galilean_trajectory(traj: &Trajectory, n: i64) -> Result<Trajectory> {
    let states = traj
        .states()
        .par_iter()
        .enumerate()
        .map(|(i, s)| galilean(s, n, traj.time(i)))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(traj.start(), traj.step(), states)
}

/// Energy fraction a source spectrum may carry beyond `λ` times the target band.
const RESCALE_TAIL_TOLERANCE: f64 = 1e-12;

/// `g(x) = λ⁻¹ f(x/λ)` resampled onto `target` by evaluating the trigonometric
/// interpolant of `f`; points with `|x/λ| > L_f/2` are set to zero.
pub fn rescale(f: &Field, lambda: f64, target: &Grid) -> Result<Field> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("scale factor {lambda} must be positive")));
    }
    let source = f.grid();
    if lambda == 1.0 && source == target {
        return Ok(f.clone());
    }
    // ĝ(ξ) = f̂(λξ) must fit under the target band.
    let cutoff = lambda * 0.9 * target.nyquist();
    let fraction = f.spectral_tail_fraction(cutoff);
    if fraction > RESCALE_TAIL_TOLERANCE {
        return Err(Error::BandwidthOverflow(format!(
            "{fraction:.3e} of the energy lies beyond |ξ| = {cutoff} after scaling by {lambda}"
        )));
    }
    let spec = f.spectrum();
    let bins: Vec<(f64, Complex64)> = spec
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(i, &c)| (source.xi(i), c))
        .collect();
    let half = 0.5 * source.length();
    let norm = source.dxi() / (2.0 * std::f64::consts::PI) / lambda;
    let values: Vec<Complex64> = (0..target.len())
        .into_par_iter()
        .map(|j| {
            let y = target.x(j) / lambda;
            if y.abs() > half + 1e-12 {
                return Complex64::new(0.0, 0.0);
            }
            let s: Complex64 = bins
                .iter()
                .map(|&(xi, c)| c * Complex64::from_polar(1.0, xi * y))
                .sum();
            s * norm
        })
        .collect();
    Field::from_values(target, values)
}

/// `χ = ξ₁² - ξ₂² + ξ₃² - ξ²` with `ξ₂ = ξ₁ + ξ₃ - ξ`, in factored form `-2(ξ - ξ₁)(ξ - ξ₃)`.
pub fn phase_mismatch(xi: f64, xi1: f64, xi3: f64) -> f64 {
    -2.0 * (xi - xi1) * (xi - xi3)
}

/// `χ` from the four squares, for checking the factorization.
pub fn phase_mismatch_expanded(xi: f64, xi1: f64, xi3: f64) -> f64 {
    let xi2 = xi1 + xi3 - xi;
    xi1 * xi1 - xi2 * xi2 + xi3 * xi3 - xi * xi
}

/// `∫₀^t e^{-iτχ} dτ = (1 - e^{-itχ})/(iχ)`, equal to `t` at `χ = 0`.
fn phase_integral(chi: f64, t: f64) -> Complex64 {
    let x = chi * t;
    if x.abs() < 1e-4 {
        // Taylor series of t(1 - e^{-ix})/(ix).
        let ix = Complex64::new(0.0, -x);
        return (Complex64::new(1.0, 0.0) + ix / 2.0 + ix * ix / 6.0 + ix * ix * ix / 24.0) * t;
    }
    (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -x)) / Complex64::new(0.0, chi)
}

/// First nontrivial iterate without the `∓2i` prefactor, `g = ∫₀^t S(t-τ)|S(τ)u₀|²S(τ)u₀ dτ`,
/// evaluated in frequency as
/// `ĝ(ξ) = e^{-itξ²} (dξ/2π)² Σ û₀(ξ₁) conj(û₀(ξ₂)) û₀(ξ₃) (1 - e^{-itχ})/(iχ)`.
/// Cost is cubic in the number of nonzero bins, so this is meant for compact spectra.
pub fn first_iterate_closed_form(u0: &Field, t: f64) -> Result<Field> {
    let grid = u0.grid();
    let spec = u0.spectrum();
    let support: Vec<(i64, f64, Complex64)> = spec
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(i, &c)| (grid.signed_index(i), grid.xi(i), c))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for &(m1, x1, c1) in &support {
        for &(m2, _, c2) in &support {
            for &(m3, x3, c3) in &support {
                let m = m1 - m2 + m3;
                let i = grid.index_of(m).ok_or_else(|| {
                    Error::BandwidthOverflow(format!("output bin {m} beyond the grid"))
                })?;
                let xi = grid.xi(i);
                out[i] += c1 * c2.conj() * c3 * phase_integral(phase_mismatch(xi, x1, x3), t);
            }
        }
    }
    let scale = (grid.dxi() / (2.0 * std::f64::consts::PI)).powi(2);
    for (i, v) in out.iter_mut().enumerate() {
        let xi = grid.xi(i);
        *v *= Complex64::from_polar(scale, -t * xi * xi);
    }
    Field::from_spectrum(grid, out)
}

/// Growth exponents of the local theory for a degree-`k` nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeEstimate {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub degree: u32,
}

impl TimeEstimate {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64, degree: u32) -> Result<Self> {
        let e = Self {
            alpha1,
            alpha2,
            alpha3,
            degree,
        };
        e.validate()?;
        Ok(e)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha2 > 0.0) || self.alpha1 < 0.0 || self.alpha3 < 0.0 || self.degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "time estimate needs α₂ > 0, α₁, α₃ ≥ 0 and k ≥ 2, got {self:?}"
            )));
        }
        Ok(())
    }

    /// `β₁ = (k-1)/((k-1)α₁ + α₂ + α₃)`.
    pub fn beta1(&self) -> f64 {
        let k1 = (self.degree - 1) as f64;
        k1 / (k1 * self.alpha1 + self.alpha2 + self.alpha3)
    }

    /// `β₂ = (k-1)/α₂`.
    pub fn beta2(&self) -> f64 {
        (self.degree - 1) as f64 / self.alpha2
    }
}

/// Guaranteed existence time `min(ε^{-β₁}, ε^{-β₂})` for data of size `ε`.
pub fn guaranteed_time(e: &TimeEstimate, eps: f64) -> Result<f64> {
    e.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("data size {eps} must be positive")));
    }
    Ok(eps.powf(-e.beta1()).min(eps.powf(-e.beta2())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TestFunction;

    #[test]
    fn sign_values() {
        assert_eq!(Sign::Defocusing.value(), 1.0);
        assert_eq!(Sign::Focusing.value(), -1.0);
    }

    #[test]
    fn free_evolution_identity_and_unitarity() {
        let g = Grid::new(4, 256).unwrap();
        let f = TestFunction::random_schwartz(1.0, 9).build(&g).unwrap();
        assert!(free_evolve(&f, 0.0).max_abs_diff(&f).unwrap() < 1e-14);
        let e = free_evolve(&f, 2.7);
        assert!((e.l2_norm() - f.l2_norm()).abs() < 1e-13 * f.l2_norm());
    }

    #[test]
    fn free_gaussian_closed_form() {
        let g = Grid::new(16, 2048).unwrap();
        let f = TestFunction::gaussian(1.0).build(&g).unwrap();
        let e = free_evolve(&f, 1.0);
        let z = Complex64::new(1.0, 2.0);
        let exact = Field::from_fn(&g, |x| z.powf(-0.5) * (-(x * x) / (2.0 * z)).exp());
        assert!(e.max_abs_diff(&exact).unwrap() < 1e-9);
    }

    #[test]
    fn odd_triple_enumeration() {
        assert_eq!(odd_triples(3), vec![(1, 1, 1)]);
        assert!(odd_triples(2).is_empty());
        assert_eq!(odd_triples(5), vec![(1, 1, 3), (1, 3, 1), (3, 1, 1)]);
        assert_eq!(odd_triples(7).len(), 6);
    }

    #[test]
    fn solver_config_rules() {
        assert!(SolverConfig::new(Sign::Focusing, 1.0, 5).validate().is_err());
        assert!(SolverConfig::new(Sign::Focusing, 1.0, 10).validate().is_ok());
        assert!(SolverConfig::new(Sign::Focusing, 1.0, 10).recording(3).validate().is_err());
    }

    #[test]
    fn guaranteed_time_examples() {
        let e = TimeEstimate::new(0.5, 1.0, 0.5, 3).unwrap();
        assert!((e.beta1() - 0.8).abs() < 1e-15);
        assert!((e.beta2() - 2.0).abs() < 1e-15);
        assert!((guaranteed_time(&e, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t = guaranteed_time(&e, 0.01).unwrap();
        assert!((t - 0.01f64.powf(-0.8)).abs() < 1e-12 * t);
        assert!((t - 39.81).abs() < 0.01);
        let big = guaranteed_time(&e, 100.0).unwrap();
        assert!((big - 1e-4).abs() < 1e-18);
        assert!(TimeEstimate::new(0.5, 0.0, 0.5, 3).is_err());
    }

    #[test]
    fn galilean_zero_and_spectrum_shift() {
        let g = Grid::new(4, 256).unwrap();
        let f = TestFunction::random_schwartz(1.0, 1).build(&g).unwrap();
        assert!(galilean(&f, 0, 0.3).unwrap().max_abs_diff(&f).unwrap() == 0.0);
        let b = galilean(&f, 3, 0.0).unwrap();
        for m in -40..40i64 {
            let lhs = b.spectrum_at_bin(m).norm();
            let rhs = f.spectrum_at_bin(m + 12).norm();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_duhamel() {
        let g = Grid::new(8, 1024).unwrap();
        let u0 = TestFunction::FreqIndicator { start: 16.0, width: 1.0 }.build(&g).unwrap();
        let t = 0.1;
        let a1 = free_trajectory(&u0, t, 256).unwrap();
        let n = duhamel(&a1, &a1, &a1, Sign::Defocusing).unwrap();
        let g_quad = n.last().scaled(Complex64::new(0.0, 0.5));
        let g_closed = first_iterate_closed_form(&u0, t).unwrap();
        let rel = g_quad.l2_distance(&g_closed).unwrap() / g_closed.l2_norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn chi_factorization() {
        for &(a, b, c) in &[(3.0, 1.5, -2.25), (512.0, 511.875, 512.5), (-7.0, 0.0, 4.0)] {
            let f = phase_mismatch(a, b, c);
            let e = phase_mismatch_expanded(a, b, c);
            assert!((f - e).abs() <= 1e-12 * (a * a + b * b + c * c).max(1.0));
        }
    }

    #[test]
    fn rescale_identity_and_mass() {
        let g = Grid::new(8, 1024).unwrap();
        let f = TestFunction::gaussian(1.0).build(&g).unwrap();
        assert_eq!(rescale(&f, 1.0, &g).unwrap().values(), f.values());
        let r = rescale(&f, 2.0, &g).unwrap();
        assert!((r.l2_norm() - f.l2_norm() / 2f64.sqrt()).abs() < 1e-10);
        let exact = Field::from_fn(&g, |x| Complex64::new(0.5 * (-(x * x) / 8.0).exp(), 0.0));
        assert!(r.max_abs_diff(&exact).unwrap() < 1e-10);
    }
}
