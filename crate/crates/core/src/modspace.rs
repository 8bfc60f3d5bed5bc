//! Isometric decomposition operators `□_k = F⁻¹ σ_k F` and the norms built on them:
//! `M^s_{p,q}`, the Lorentzian-window norm `MH^{θ,q}`, the integrable-weight tilde
//! norm, and bilinear ratio probes.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrable::weight;
use crate::spectral::{lp_norm, Field, Grid};

/// Spectral energy allowed beyond `|ξ| = K_max - 1` before a norm is refused.
pub const TAIL_TOLERANCE: f64 = 1e-10;

const RELATION_TOL: f64 = 1e-12;

fn smooth_step_h(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// `ψ(x) = h(x) / (h(x) + h(1-x))`, rising from 0 at `x ≤ 0` to 1 at `x ≥ 1`.
fn smooth_step(x: f64) -> f64 {
    let a = smooth_step_h(x);
    let b = smooth_step_h(1.0 - x);
    a / (a + b)
}

/// Bump profile: 1 on `|ξ| ≤ 1/2`, 0 on `|ξ| ≥ 1`, smooth in between.
pub fn bump(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smooth_step(2.0 * (1.0 - a))
    }
}

/// Normalized window `σ_k(ξ) = ρ(ξ - k) / Σ_l ρ(ξ - l)`.
pub fn sigma(k: i64, xi: f64) -> f64 {
    let num = bump(xi - k as f64);
    if num == 0.0 {
        return 0.0;
    }
    let base = xi.floor() as i64;
    let denom: f64 = (base - 1..=base + 2).map(|l| bump(xi - l as f64)).sum();
    num / denom
}

/// `⟨k⟩ = (1 + k²)^{1/2}`.
pub fn japanese(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

/// Exponents `(p, q, s)` of `M^s_{p,q}`; `f64::INFINITY` selects the max norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModParams {
    pub p: f64,
    pub q: f64,
    #[serde(default)]
    pub s: f64,
}

impl ModParams {
    pub fn new(p: f64, q: f64, s: f64) -> Result<Self> {
        let params = Self { p, q, s };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.q >= 1.0) || !self.s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "modulation exponents need p, q >= 1 and finite s, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowInvariants {
    /// `max |Σ_k σ_k - 1|` over `|ξ| ≤ K_max - 1`.
    pub partition_error: f64,
    /// Stored entries with `|ξ - k| ≥ 1`.
    pub support_violations: usize,
    /// `min σ_k` over `ξ ∈ [k - 1/2, k + 1/2)`.
    pub min_core_value: f64,
}

/// Tabulated windows `σ_k(ξ_m)` for `|k| ≤ K_max`, each stored on its support.
#[derive(Clone, Debug)]
pub struct WindowFamily {
    grid: Grid,
    k_max: i64,
    // supports[k + k_max] = [(storage index, σ_k(ξ_i))] with σ > 0.
    supports: Vec<Vec<(usize, f64)>>,
}

impl WindowFamily {
    pub fn new(grid: &Grid, k_max: i64) -> Result<Self> {
        if k_max < 0 || k_max as f64 > grid.nyquist() - 2.0 {
            return Err(Error::InvalidParameter(format!(
                "K_max = {k_max} must lie in [0, Nyquist - 2 = {}]",
                grid.nyquist() - 2.0
            )));
        }
        let r = grid.periods() as i64;
        let supports = (-k_max..=k_max)
            .map(|k| {
                // |ξ - k| < 1 spans bins k·R - R + 1 ..= k·R + R - 1.
                (k * r - r + 1..=k * r + r - 1)
                    .filter_map(|m| {
                        let i = grid.index_of(m)?;
                        let s = sigma(k, grid.xi(i));
                        (s > 0.0).then_some((i, s))
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            k_max,
            supports,
        })
    }

    /// Largest `K_max` a grid admits.
    pub fn max_index_for(grid: &Grid) -> i64 {
        (grid.nyquist() - 2.0).floor() as i64
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    fn support(&self, k: i64) -> &[(usize, f64)] {
        &self.supports[(k + self.k_max) as usize]
    }

    /// `σ_k` at storage index `i` (zero off its support).
    pub fn value(&self, k: i64, i: usize) -> f64 {
        self.support(k)
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, s)| *s)
            .unwrap_or(0.0)
    }

    fn check_index(&self, k: i64) -> Result<()> {
        if k.abs() > self.k_max {
            Err(Error::WindowIndex {
                k,
                k_max: self.k_max,
            })
        } else {
            Ok(())
        }
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }

    /// `□_k f`: the field whose spectrum is `σ_k(ξ) f̂(ξ)`.
    pub fn block(&self, f: &Field, k: i64) -> Result<Field> {
        self.check_index(k)?;
        self.check_grid(f)?;
        Field::from_spectrum(&self.grid, self.block_spectrum(f, k))
    }

    fn block_spectrum(&self, f: &Field, k: i64) -> Vec<Complex64> {
        let spec = f.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for &(i, s) in self.support(k) {
            out[i] = spec[i] * s;
        }
        out
    }

    /// `‖□_k f‖_{L^p}`; `p = 2` goes through Plancherel.
    fn block_lp(&self, f: &Field, k: i64, p: f64) -> Result<f64> {
        let spec = f.spectrum();
        if p == 2.0 {
            let e: f64 = self
                .support(k)
                .iter()
                .map(|&(i, s)| (spec[i] * s).norm_sqr())
                .sum();
            return Ok((e * self.grid.dxi() / (2.0 * PI)).sqrt());
        }
        if self.support(k).iter().all(|&(i, _)| spec[i] == Complex64::new(0.0, 0.0)) {
            return Ok(0.0);
        }
        let values = self.grid.inverse(&self.block_spectrum(f, k));
        lp_norm(&values, p, self.grid.dx())
    }

    /// Worst violations of the three window properties over the lattice, counting
    /// the partition of unity only where every contributing window is present.
    pub fn invariant_report(&self) -> WindowInvariants {
        let inner = (self.k_max - 1) as f64;
        let mut totals = vec![0.0; self.grid.len()];
        let mut report = WindowInvariants {
            partition_error: 0.0,
            support_violations: 0,
            min_core_value: f64::INFINITY,
        };
        for k in -self.k_max..=self.k_max {
            for &(i, s) in self.support(k) {
                totals[i] += s;
                if (self.grid.xi(i) - k as f64).abs() >= 1.0 {
                    report.support_violations += 1;
                }
            }
            let r = self.grid.periods() as i64;
            // Core `[k - 1/2, k + 1/2)` spans bins k·R - R/2 .. k·R + R/2.
            for m in k * r - r / 2..k * r + (r + 1) / 2 {
                if let Some(i) = self.grid.index_of(m) {
                    report.min_core_value = report.min_core_value.min(self.value(k, i));
                }
            }
        }
        for (i, t) in totals.iter().enumerate() {
            if self.grid.xi(i).abs() <= inner {
                report.partition_error = report.partition_error.max((t - 1.0).abs());
            }
        }
        report
    }

    /// Refuse norms whose truncation at `K_max` would be discretization-dominated.
    pub fn check_tail(&self, f: &Field) -> Result<()> {
        let cutoff = (self.k_max - 1) as f64;
        let fraction = f.spectral_tail_fraction(cutoff);
        if fraction >= TAIL_TOLERANCE {
            return Err(Error::TailTooHeavy { cutoff, fraction });
        }
        Ok(())
    }

    /// `‖f‖_{M^s_{p,q}} = ‖⟨k⟩^s ‖□_k f‖_{L^p}‖_{ℓ^q(|k| ≤ K_max)}`.
    pub fn mod_norm(&self, f: &Field, params: ModParams) -> Result<f64> {
        params.validate()?;
        self.check_grid(f)?;
        self.check_tail(f)?;
        // Populate the spectrum cache before fanning out.
        f.spectrum();
        let terms = (-self.k_max..=self.k_max)
            .into_par_iter()
            .map(|k| Ok(japanese(k as f64).powf(params.s) * self.block_lp(f, k, params.p)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(lq_norm(&terms, params.q))
    }

    /// `‖f‖_{MH^{θ,q}} = (Σ_{|n|≤K_max} ‖⟨ξ-n⟩^θ f̂‖^q_{L²_ξ})^{1/q}` with `L²_ξ = (Σ_m |·|² dξ)^{1/2}`.
    pub fn mh_norm(&self, f: &Field, theta: f64, q: f64) -> Result<f64> {
        if !(theta < 0.0) {
            return Err(Error::InvalidParameter(format!("MH norm needs θ < 0, got {theta}")));
        }
        self.weighted_lq(f, q, |d| japanese(d).powf(2.0 * theta))
    }

    /// Tilde norm: windows `w(ξ - n, 1)^{1/2}` from the integrable weight, `ℓ^q` over `|n| ≤ K_max`.
    pub fn tilde_norm(&self, f: &Field, q: f64) -> Result<f64> {
        self.weighted_lq(f, q, |d| weight(d, 1.0))
    }

    // `squared_window(ξ - n)` multiplies |f̂|² inside each L²_ξ integral.
    fn weighted_lq(&self, f: &Field, q: f64, squared_window: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("ℓ^q needs q >= 1, got {q}")));
        }
        self.check_grid(f)?;
        let spec = f.spectrum();
        let energy: Vec<(f64, f64)> = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(i, c)| (self.grid.xi(i), c.norm_sqr()))
            .collect();
        let dxi = self.grid.dxi();
        let terms: Vec<f64> = (-self.k_max..=self.k_max)
            .into_par_iter()
            .map(|n| {
                let s: f64 = energy
                    .iter()
                    .map(|&(xi, e)| squared_window(xi - n as f64) * e)
                    .sum();
                (s * dxi).sqrt()
            })
            .collect();
        Ok(lq_norm(&terms, q))
    }

    /// `‖fg‖_{M^{s}_{p,q}} / (‖f‖_{M^{s₁}_{p₁,q₁}} ‖g‖_{M^{s₂}_{p₂,q₂}})`, with the product formed
    /// on the 2× refined grid and truncated back.
    pub fn bilinear_ratio(
        &self,
        f: &Field,
        g: &Field,
        target: ModParams,
        left: ModParams,
        right: ModParams,
    ) -> Result<f64> {
        check_bilinear_relation(target, left, right)?;
        self.check_grid(f)?;
        self.check_grid(g)?;
        let product = Field::from_spectrum(&self.grid, self.grid.product(f.spectrum(), g.spectrum()))?;
        let num = self.mod_norm(&product, target)?;
        let den = self.mod_norm(f, left)? * self.mod_norm(g, right)?;
        if den == 0.0 {
            return Err(Error::InvalidParameter("bilinear ratio with a zero factor".into()));
        }
        Ok(num / den)
    }
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Hölder in `p` (`1/p = 1/p₁ + 1/p₂`) and Young in `q` (`1 + 1/q = 1/q₁ + 1/q₂`).
pub fn check_bilinear_relation(target: ModParams, left: ModParams, right: ModParams) -> Result<()> {
    for p in [target, left, right] {
        p.validate()?;
    }
    let holder = inv(target.p) - inv(left.p) - inv(right.p);
    if holder.abs() > RELATION_TOL {
        return Err(Error::ExponentRelationViolated(format!(
            "1/p - 1/p1 - 1/p2 = {holder}"
        )));
    }
    let young = 1.0 + inv(target.q) - inv(left.q) - inv(right.q);
    if young.abs() > RELATION_TOL {
        return Err(Error::ExponentRelationViolated(format!(
            "1 + 1/q - 1/q1 - 1/q2 = {young}"
        )));
    }
    Ok(())
}

/// `ℓ^q` norm of non-negative terms; `q = ∞` is the max.
pub fn lq_norm(terms: &[f64], q: f64) -> f64 {
    let peak = terms.iter().copied().fold(0.0, f64::max);
    if q.is_infinite() || peak == 0.0 {
        return peak;
    }
    if q == 1.0 {
        return terms.iter().sum();
    }
    let s: f64 = terms.iter().map(|t| (t / peak).powf(q)).sum();
    peak * s.powf(1.0 / q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TestFunction;

    fn grid8() -> Grid {
        Grid::new(8, 1024).unwrap()
    }

    #[test]
    fn bump_profile_values() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert!((bump(0.75) - 0.5).abs() < 1e-15);
        assert!(bump(0.6) > bump(0.9));
    }

    #[test]
    fn sigma_point_values() {
        assert_eq!(sigma(0, 0.0), 1.0);
        assert_eq!(sigma(1, 0.0), 0.0);
        assert_eq!(sigma(-1, 0.0), 0.0);
        let total: f64 = (-3..=3).map(|k| sigma(k, 0.73)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_invariants_on_lattice() {
        let g = grid8();
        let w = WindowFamily::new(&g, 60).unwrap();
        for i in 0..g.len() {
            let xi = g.xi(i);
            let total: f64 = (-60..=60).map(|k| w.value(k, i)).sum();
            if xi.abs() <= 59.0 {
                assert!((total - 1.0).abs() <= 1e-12, "partition at {xi}");
            }
            for k in -60..=60i64 {
                let s = w.value(k, i);
                if (xi - k as f64).abs() >= 1.0 {
                    assert_eq!(s, 0.0);
                }
                if xi >= k as f64 - 0.5 && xi < k as f64 + 0.5 {
                    assert!(s >= 0.5, "lower bound k={k} xi={xi}");
                }
            }
        }
        let r = w.invariant_report();
        assert!(r.partition_error <= 1e-12 && r.support_violations == 0 && r.min_core_value >= 0.5);
        // σ_5 vanishes at and below ξ = 4.
        for i in 0..g.len() {
            if g.xi(i) <= 4.0 {
                assert_eq!(w.value(5, i), 0.0);
            }
        }
    }

    #[test]
    fn k_max_bounds() {
        let g = grid8();
        assert!(WindowFamily::new(&g, 62).is_ok());
        assert!(WindowFamily::new(&g, 63).is_err());
        assert_eq!(WindowFamily::max_index_for(&g), 62);
    }

    #[test]
    fn blocks_of_constant_and_plane_wave() {
        let g = Grid::new(2, 128).unwrap();
        let w = WindowFamily::new(&g, 20).unwrap();
        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        assert!(w.block(&one, 0).unwrap().max_abs_diff(&one).unwrap() < 1e-14);
        for k in [-3, 1, 5] {
            assert!(w.block(&one, k).unwrap().lp_norm(f64::INFINITY).unwrap() < 1e-15);
        }
        let wave = TestFunction::PlaneWave { amplitude: 1.0, frequency: 4.0 }.build(&g).unwrap();
        for k in 2..=6 {
            let b = w.block(&wave, k).unwrap();
            let expected = wave.scaled_real(sigma(k, 4.0));
            assert!(b.max_abs_diff(&expected).unwrap() < 1e-13);
        }
        assert!(matches!(w.block(&one, 21), Err(Error::WindowIndex { .. })));
    }

    #[test]
    fn blocks_resum_band_limited_field() {
        let g = grid8();
        let w = WindowFamily::new(&g, 30).unwrap();
        let f = TestFunction::random_schwartz(1.0, 5).build(&g).unwrap();
        let mut acc = Field::zeros(&g);
        for k in -30..=30 {
            acc = acc.add(&w.block(&f, k).unwrap()).unwrap();
        }
        assert!(acc.max_abs_diff(&f).unwrap() <= 1e-12 * f.lp_norm(f64::INFINITY).unwrap());
    }

    #[test]
    fn mod_norm_single_block_cases() {
        let g = Grid::new(2, 128).unwrap();
        let w = WindowFamily::new(&g, 20).unwrap();
        let l = g.length();
        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        let wave = TestFunction::PlaneWave { amplitude: 1.0, frequency: 3.0 }.build(&g).unwrap();
        for (p, q, s) in [(1.0, 1.0, 0.0), (2.0, 2.0, 1.5), (4.0, f64::INFINITY, -0.5), (f64::INFINITY, 3.0, 2.0)] {
            let params = ModParams::new(p, q, s).unwrap();
            let n1 = w.mod_norm(&one, params).unwrap();
            assert!((n1 - l.powf(1.0 / p)).abs() < 1e-12 * n1.max(1.0), "p={p}");
            let n2 = w.mod_norm(&wave, params).unwrap();
            let expected = japanese(3.0).powf(s) * l.powf(1.0 / p);
            assert!((n2 - expected).abs() < 1e-12 * expected, "p={p} q={q}");
        }
    }

    #[test]
    fn mod_norm_gaussian_bracket() {
        let g = grid8();
        let w = WindowFamily::new(&g, 60).unwrap();
        let f = TestFunction::gaussian(1.0).build(&g).unwrap();
        let ratio = w.mod_norm(&f, ModParams::new(2.0, 2.0, 0.0).unwrap()).unwrap() / f.l2_norm();
        assert!(ratio >= 1.0 / 3f64.sqrt() && ratio <= 1.0, "{ratio}");
    }

    #[test]
    fn tail_guard_trips() {
        let g = Grid::new(2, 128).unwrap();
        let w = WindowFamily::new(&g, 10).unwrap();
        let wave = TestFunction::PlaneWave { amplitude: 1.0, frequency: 12.0 }.build(&g).unwrap();
        let err = w.mod_norm(&wave, ModParams::new(2.0, 2.0, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TailTooHeavy { .. }));
    }

    #[test]
    fn mh_norm_of_constant_matches_lattice_sum() {
        let g = Grid::new(2, 128).unwrap();
        let w = WindowFamily::new(&g, 20).unwrap();
        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        let theta = -1.5;
        for q in [1.0, 2.0, 3.0] {
            let weight_bin = g.length() * g.dxi().sqrt();
            let lattice: f64 = (-20..=20).map(|n| japanese(n as f64).powf(theta * q)).sum();
            let expected = weight_bin * lattice.powf(1.0 / q);
            let got = w.mh_norm(&one, theta, q).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected, "q={q}");
        }
        assert_eq!(w.mh_norm(&Field::zeros(&g), theta, 1.0).unwrap(), 0.0);
        assert!(w.mh_norm(&one, 0.5, 1.0).is_err());
    }

    #[test]
    fn tilde_norm_homogeneous() {
        let g = grid8();
        let w = WindowFamily::new(&g, 40).unwrap();
        let f = TestFunction::random_schwartz(1.0, 2).build(&g).unwrap();
        let base = w.tilde_norm(&f, 1.0).unwrap();
        let scaled = w.tilde_norm(&f.scaled(Complex64::new(-2.5, 1.0)), 1.0).unwrap();
        let factor = Complex64::new(-2.5, 1.0).norm();
        assert!((scaled - factor * base).abs() < 1e-13 * scaled);
        assert_eq!(w.tilde_norm(&Field::zeros(&g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_exact_cases() {
        let g = Grid::new(2, 128).unwrap();
        let w = WindowFamily::new(&g, 20).unwrap();
        let one = Field::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        let p = |p, q| ModParams::new(p, q, 0.0).unwrap();
        let r = w.bilinear_ratio(&one, &one, p(2.0, 1.0), p(4.0, 1.0), p(4.0, 1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let f = TestFunction::PlaneWave { amplitude: 1.0, frequency: 3.0 }.build(&g).unwrap();
        let h = TestFunction::PlaneWave { amplitude: 1.0, frequency: 5.0 }.build(&g).unwrap();
        let r = w.bilinear_ratio(&f, &h, p(1.0, 1.0), p(1.0, 1.0), p(f64::INFINITY, 1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");
        let bad = w.bilinear_ratio(&f, &h, p(1.0, 1.0), p(2.0, 1.0), p(2.0, 2.0));
        assert!(matches!(bad, Err(Error::ExponentRelationViolated(_))));
    }

    #[test]
    fn lq_norm_limits() {
        let t = [3.0, 4.0];
        assert_eq!(lq_norm(&t, 1.0), 7.0);
        assert!((lq_norm(&t, 2.0) - 5.0).abs() < 1e-15);
        assert_eq!(lq_norm(&t, f64::INFINITY), 4.0);
    }
}
