//! Conserved quantities from complete integrability: `α₂`, `α₄`, the full
//! perturbation determinant through a finite log-determinant, the Hilbert–Schmidt
//! comparison, the recombined weight `w(ξ,κ)` and Galilean α-profiles.
//!
//! All coefficients use the normalization in which `α₂ = Re tr Λ`, that is
//! `α₂ = (1/2π) ∫ 2κ|û|²/(ξ² + 4κ²) dξ` in this crate's transform convention.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nls::{galilean, Sign};
use crate::spectral::{Field, Trajectory};

/// `w(ξ,κ) = 3κ⁴ / ((ξ² + κ²)(ξ² + 4κ²))`.
pub fn weight(xi: f64, kappa: f64) -> f64 {
    let x2 = xi * xi;
    let k2 = kappa * kappa;
    3.0 * k2 * k2 / ((x2 + k2) * (x2 + 4.0 * k2))
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("κ = {kappa} must be positive")))
    }
}

/// `α₂(κ,u) = (1/2π) Σ_m 2κ|û_m|² dξ / (ξ_m² + 4κ²)`.
pub fn alpha2(f: &Field, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let g = f.grid();
    let s: f64 = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = g.xi(i);
            2.0 * kappa * c.norm_sqr() / (xi * xi + 4.0 * kappa * kappa)
        })
        .sum();
    Ok(s * g.dxi() / (2.0 * PI))
}

/// `(1/2π) Σ_m w(ξ_m,κ)|û_m|² dξ`, in the same normalization as [`alpha2`].
pub fn weighted_mass(f: &Field, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    let g = f.grid();
    let s: f64 = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| weight(g.xi(i), kappa) * c.norm_sqr())
        .sum();
    Ok(s * g.dxi() / (2.0 * PI))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha4Method {
    Naive,
    Accelerated,
}

/// Quartic coefficient from the Koch–Tataru formula, in the defocusing sign
/// convention (the focusing coefficient is its negative):
/// `α₄ = (dξ³/(2π)³) Σ [2κ(ξ₁ξ₃ + ξ₁ξ₄ + ξ₃ξ₄) - 8κ³] / (d₁d₃d₄) · Re(conj(û₁û₂)û₃û₄)`
/// over lattice tuples with `ξ₁ + ξ₂ = ξ₃ + ξ₄`, where `d = 4κ² + ξ²`.
pub fn alpha4(f: &Field, kappa: f64, method: Alpha4Method) -> Result<f64> {
    check_kappa(kappa)?;
    match method {
        Alpha4Method::Naive => Ok(alpha4_naive(f, kappa)),
        Alpha4Method::Accelerated => Ok(alpha4_accelerated(f, kappa)),
    }
}

/// Spectrum in signed order `m = -M/2 .. M/2-1` together with frequencies.
fn signed_spectrum(f: &Field) -> (Vec<f64>, Vec<Complex64>) {
    let g = f.grid();
    let m = g.len();
    let half = (m / 2) as i64;
    let spec = f.spectrum();
    let mut xs = Vec::with_capacity(m);
    let mut us = Vec::with_capacity(m);
    for s in -half..half {
        let i = g.index_of(s).expect("in band");
        xs.push(g.xi(i));
        us.push(spec[i]);
    }
    (xs, us)
}

fn alpha4_prefactor(dxi: f64) -> f64 {
    (dxi / (2.0 * PI)).powi(3)
}

fn alpha4_naive(f: &Field, kappa: f64) -> f64 {
    let (xs, us) = signed_spectrum(f);
    let m = xs.len() as i64;
    let k2 = 4.0 * kappa * kappa;
    let d: Vec<f64> = xs.iter().map(|x| k2 + x * x).collect();
    let total: f64 = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc = 0.0;
            let (x1, u1) = (xs[a as usize], us[a as usize]);
            for c in 0..m {
                let (x3, u3) = (xs[c as usize], us[c as usize]);
                for e in 0..m {
                    let b = c + e - a;
                    if b < 0 || b >= m {
                        continue;
                    }
                    let (x4, u4) = (xs[e as usize], us[e as usize]);
                    let num = 2.0 * kappa * (x1 * x3 + x1 * x4 + x3 * x4) - 8.0 * kappa.powi(3);
                    let den = d[a as usize] * d[c as usize] * d[e as usize];
                    let q = (u1 * us[b as usize]).conj() * u3 * u4;
                    acc += num / den * q.re;
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    alpha4_prefactor(f.grid().dxi()) * total
}

/// Linear (non-circular) convolutions of signed-order sequences via 2M-point FFTs.
struct Convolver {
    n: usize,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl Convolver {
    fn new(len: usize) -> Self {
        let n = 2 * len;
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn transform(&self, a: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        buf[..a.len()].copy_from_slice(a);
        self.forward.process(&mut buf);
        buf
    }

    fn convolve(&self, fa: &[Complex64], fb: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = fa.iter().zip(fb).map(|(x, y)| x * y).collect();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        buf
    }
}

fn alpha4_accelerated(f: &Field, kappa: f64) -> f64 {
    let (xs, us) = signed_spectrum(f);
    let k2 = 4.0 * kappa * kappa;
    let a: Vec<Complex64> = xs.iter().zip(&us).map(|(x, u)| u / (k2 + x * x)).collect();
    let b: Vec<Complex64> = xs.iter().zip(&us).map(|(x, u)| u * (x / (k2 + x * x))).collect();
    let conv = Convolver::new(xs.len());
    let (fu, fa, fb) = (conv.transform(&us), conv.transform(&a), conv.transform(&b));
    let bu = conv.convolve(&fb, &fu);
    let ba = conv.convolve(&fb, &fa);
    let au = conv.convolve(&fa, &fu);
    let bb = conv.convolve(&fb, &fb);
    let aa = conv.convolve(&fa, &fa);
    let pair = |x: &[Complex64], y: &[Complex64]| -> Complex64 {
        x.iter().zip(y).map(|(p, q)| p.conj() * q).sum()
    };
    let s13 = pair(&bu, &ba);
    let s34 = pair(&au, &bb);
    let s0 = pair(&au, &aa);
    let total = (s13 * 2.0 + s34) * (2.0 * kappa) - s0 * (8.0 * kappa.powi(3));
    alpha4_prefactor(f.grid().dxi()) * total.re
}

/// `Λ = D₋^{1/2} U D₊ U* D₋^{1/2}` on the torus Fourier basis (storage order), with
/// `D_∓ = diag((κ ∓ iξ)^{-1})` and `U` the circulant of multiplication by `u`.
pub struct LambdaMatrix {
    pub matrix: Mat<Complex64>,
    pub multiplication: Mat<Complex64>,
}

/// Circulant `U[i,j] = û(ξ_i - ξ_j)/L` in storage order.
pub fn multiplication_matrix(f: &Field) -> Mat<Complex64> {
    let g = f.grid();
    let m = g.len();
    let spec = f.spectrum();
    let inv_l = 1.0 / g.length();
    Mat::from_fn(m, m, |i, j| spec[(i + m - j) % m] * inv_l)
}

pub fn build_lambda(f: &Field, kappa: f64) -> Result<LambdaMatrix> {
    check_kappa(kappa)?;
    let g = f.grid();
    let m = g.len();
    let u = multiplication_matrix(f);
    let minus_half: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(kappa, -g.xi(i)).sqrt().inv())
        .collect();
    let plus: Vec<Complex64> = (0..m).map(|i| Complex64::new(kappa, g.xi(i)).inv()).collect();
    let left = Mat::from_fn(m, m, |i, j| minus_half[i] * u[(i, j)] * plus[j]);
    let right = Mat::from_fn(m, m, |i, j| u[(j, i)].conj() * minus_half[j]);
    let matrix = &left * &right;
    if matrix.col_iter().any(|c| c.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())) {
        return Err(Error::LinearAlgebra("non-finite entries in Λ".into()));
    }
    Ok(LambdaMatrix {
        matrix,
        multiplication: u,
    })
}

impl LambdaMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix
            .col_iter()
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        self.matrix
            .eigenvalues()
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
    }

    /// `tr Λⁿ` for `n = 1..=terms` from explicit matrix powers.
    pub fn power_traces(&self, terms: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(terms);
        let mut power = self.matrix.clone();
        for n in 1..=terms {
            if n > 1 {
                power = &power * &self.matrix;
            }
            out.push((0..self.dim()).map(|i| power[(i, i)]).sum());
        }
        out
    }
}

/// `(∓1)^{n-1}`: the coefficient sign of `tr Λⁿ/n` in the series.
fn series_sign(sign: Sign, n: usize) -> f64 {
    match sign {
        Sign::Defocusing if n.is_multiple_of(2) => -1.0,
        _ => 1.0,
    }
}

/// `log(1 + λ)` (defocusing) or `-log(1 - λ)` (focusing), the resummed series.
fn resummed(lambda: Complex64, sign: Sign) -> Complex64 {
    match sign {
        Sign::Defocusing => (Complex64::new(1.0, 0.0) + lambda).ln(),
        Sign::Focusing => -(Complex64::new(1.0, 0.0) - lambda).ln(),
    }
}

/// `Σ_{n≥3} (∓1)^{n-1} λⁿ/n`.
fn series_tail(lambda: Complex64, sign: Sign) -> Complex64 {
    if lambda.norm() < 0.25 {
        let mut power = lambda * lambda;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 3..80 {
            power *= lambda;
            let term = power * (series_sign(sign, n) / n as f64);
            acc += term;
            if term.norm() < 1e-18 * acc.norm().max(1e-300) {
                break;
            }
        }
        acc
    } else {
        resummed(lambda, sign) - lambda - lambda * lambda * (series_sign(sign, 2) / 2.0)
    }
}

/// Bound on `Σ_j Σ_{n ≥ from} |λ_j|ⁿ/n` given `Σ|λ_j|² ≤ ‖Λ‖²_F` and radius `ρ < 1`.
pub fn series_tail_bound(frobenius_sq: f64, radius: f64, from: usize) -> f64 {
    if radius >= 1.0 {
        return f64::INFINITY;
    }
    frobenius_sq * radius.powi(from as i32 - 2) / (from as f64 * (1.0 - radius))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaResult {
    pub kappa: f64,
    pub sign: Sign,
    pub alpha2: f64,
    /// Quartic coefficient with the sign of the series for `sign`.
    pub alpha4: f64,
    /// `α₂ + α₄ + Re Σ_{n≥3}(∓1)^{n-1} tr Λⁿ/n`, the tail taken from the eigenvalues of `Λ`.
    pub alpha_full: f64,
    /// `Re log det(I + Λ)` or `-Re log det(I - Λ)` of the truncated matrix.
    pub raw_log_det: f64,
    pub spectral_radius: f64,
    pub frobenius_sq: f64,
    /// Bound on `|α_full - α₂ - α₄|` from the geometric series.
    pub tail_bound: f64,
    pub converged: bool,
}

/// Full perturbation determinant of `f` at `κ` for the given sign.
///
/// The quadratic and quartic coefficients come from their quadrature formulas,
/// which are exact for band-limited data; only the sextic and higher part is taken
/// from the truncated matrix, whose own quadratic part carries a truncation bias.
pub fn alpha_full(f: &Field, kappa: f64, sign: Sign) -> Result<AlphaResult> {
    let a2 = alpha2(f, kappa)?;
    let quartic = alpha4(f, kappa, Alpha4Method::Accelerated)?;
    let a4 = match sign {
        Sign::Defocusing => quartic,
        Sign::Focusing => -quartic,
    };
    let lambda = build_lambda(f, kappa)?;
    let eig = lambda.eigenvalues()?;
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let frob = lambda.frobenius_sq();
    let raw: f64 = eig.iter().map(|&z| resummed(z, sign).re).sum();
    let tail: f64 = eig.iter().map(|&z| series_tail(z, sign).re).sum();
    Ok(AlphaResult {
        kappa,
        sign,
        alpha2: a2,
        alpha4: a4,
        alpha_full: a2 + a4 + tail,
        raw_log_det: raw,
        spectral_radius: radius,
        frobenius_sq: frob,
        tail_bound: series_tail_bound(frob, radius, 3),
        converged: radius < 1.0,
    })
}

/// `Re Σ_{n≤terms} (∓1)^{n-1} tr Λⁿ/n` from explicit matrix powers.
pub fn truncated_series(f: &Field, kappa: f64, sign: Sign, terms: usize) -> Result<f64> {
    let lambda = build_lambda(f, kappa)?;
    Ok(lambda
        .power_traces(terms)
        .iter()
        .enumerate()
        .map(|(k, t)| series_sign(sign, k + 1) * t.re / (k + 1) as f64)
        .sum())
}

/// Both sides of the Hilbert–Schmidt comparison:
/// `‖(κ-∂)^{-1/2} u (κ+∂)^{-1/2}‖²_F` and `(1/2π) Σ log(4 + ξ²/κ²)|û|²(ξ² + 4κ²)^{-1/2} dξ`.
pub fn hs_norm_check(f: &Field, kappa: f64) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    let g = f.grid();
    let m = g.len();
    let spec = f.spectrum();
    let inv_abs: Vec<f64> = (0..m).map(|i| 1.0 / kappa.hypot(g.xi(i))).collect();
    let l2 = g.length().powi(2);
    let lhs: f64 = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| spec[(i + m - j) % m].norm_sqr() * inv_abs[i] * inv_abs[j])
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / l2;
    let rhs: f64 = spec
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let xi = g.xi(i);
            (4.0 + xi * xi / (kappa * kappa)).ln() * c.norm_sqr() / (xi * xi + 4.0 * kappa * kappa).sqrt()
        })
        .sum::<f64>()
        * g.dxi()
        / (2.0 * PI);
    Ok((lhs, rhs))
}

/// The recombination `c·α₂(κ/2) - (κ/2)·α₂(κ)` against `(1/2π)∫ w(ξ,κ)|û|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightIdentity {
    pub combo: f64,
    pub weighted: f64,
    pub c_star: f64,
}

/// Coefficient `c` solving `c·α₂(κ/2) - (κ/2)α₂(κ) = ∫w|û|²` for the Gaussian at `κ`.
pub fn calibrate_c_star(kappa: f64, grid: &crate::spectral::Grid) -> Result<f64> {
    let g = crate::spectral::TestFunction::gaussian(1.0).build(grid)?;
    let weighted = weighted_mass(&g, kappa)?;
    Ok((weighted + 0.5 * kappa * alpha2(&g, kappa)?) / alpha2(&g, 0.5 * kappa)?)
}

pub fn weight_identity(f: &Field, kappa: f64) -> Result<WeightIdentity> {
    let c_star = calibrate_c_star(kappa, f.grid())?;
    let combo = c_star * alpha2(f, 0.5 * kappa)? - 0.5 * kappa * alpha2(f, kappa)?;
    Ok(WeightIdentity {
        combo,
        weighted: weighted_mass(f, kappa)?,
        c_star,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: i64,
    pub t: f64,
    pub alpha: f64,
    pub converged: bool,
}

/// `α(κ, u_n(t))` for each boost `n` and stored slice, ordered by `(n, t)`.
pub fn galilean_alpha_profile(
    traj: &Trajectory,
    kappa: f64,
    sign: Sign,
    boosts: &[i64],
) -> Result<Vec<ProfileRow>> {
    let jobs: Vec<(i64, usize)> = boosts
        .iter()
        .flat_map(|&n| (0..traj.len()).map(move |i| (n, i)))
        .collect();
    jobs.par_iter()
        .map(|&(n, i)| {
            let t = traj.time(i);
            let boosted = galilean(traj.state(i), n, t)?;
            let r = alpha_full(&boosted, kappa, sign)?;
            Ok(ProfileRow {
                n,
                t,
                alpha: r.alpha_full,
                converged: r.converged,
            })
        })
        .collect()
}

/// Per-boost `max_t |α(t) - α(0)|` over converged frames, ordered as the boosts appear.
pub fn profile_drift(rows: &[ProfileRow]) -> Vec<(i64, f64)> {
    let mut out: Vec<(i64, f64)> = Vec::new();
    let mut base = 0.0;
    for r in rows {
        if out.last().map(|(n, _)| *n) != Some(r.n) {
            out.push((r.n, 0.0));
            base = r.alpha;
        }
        if r.converged {
            let last = out.last_mut().expect("pushed");
            last.1 = last.1.max((r.alpha - base).abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, TestFunction};

    #[test]
    fn weight_values() {
        assert!((weight(1.0, 1.0) - 0.3).abs() < 1e-15);
        assert!((weight(0.0, 1.0) - 0.75).abs() < 1e-15);
        for &(xi, k) in &[(0.3, 0.5), (2.0, 1.0), (-5.0, 2.0)] {
            let pf = k * k / (xi * xi + k * k) - k * k / (xi * xi + 4.0 * k * k);
            assert!((weight(xi, k) - pf).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha2_gaussian_value() {
        let g = Grid::new(8, 1024).unwrap();
        let f = TestFunction::gaussian(1.0).build(&g).unwrap();
        // ∫ e^{-ξ²}/(ξ²+1) dξ = π e erfc(1) ≈ 1.343293
        let a = alpha2(&f, 0.5).unwrap();
        assert!((a - 1.343_293_4).abs() < 1e-6, "{a}");
        assert_eq!(alpha2(&Field::zeros(&g), 1.0).unwrap(), 0.0);
        let b = alpha2(&f.scaled_real(3.0), 0.5).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn alpha4_paths_agree() {
        let g = Grid::new(2, 128).unwrap();
        let f = TestFunction::random_schwartz(1.0, 11).build(&g).unwrap();
        let n = alpha4(&f, 1.0, Alpha4Method::Naive).unwrap();
        let a = alpha4(&f, 1.0, Alpha4Method::Accelerated).unwrap();
        assert!((n - a).abs() <= 1e-10 * n.abs(), "{n} vs {a}");
        let s = alpha4(&f.scaled_real(0.5), 1.0, Alpha4Method::Naive).unwrap();
        assert!((s - n / 16.0).abs() < 1e-12 * n.abs());
    }

    #[test]
    fn lambda_trace_and_quartic_match_quadrature() {
        let g = Grid::new(2, 128).unwrap();
        let f = TestFunction::gaussian(0.3).build(&g).unwrap();
        let kappa = 1.0;
        let lam = build_lambda(&f, kappa).unwrap();
        let tr = lam.trace();
        let a2 = alpha2(&f, kappa).unwrap();
        // The truncated trace misses an O(1/Nyquist) slice of the resolvent sum.
        assert!((tr.re - a2).abs() < 3e-2 * a2, "{} vs {a2}", tr.re);
        assert!(tr.re < a2);
        let traces = lam.power_traces(2);
        let a4 = alpha4(&f, kappa, Alpha4Method::Accelerated).unwrap();
        let quartic = -0.5 * traces[1].re;
        assert!((quartic - a4).abs() < 1e-4 * a4.abs(), "{quartic} vs {a4}");
    }

    #[test]
    fn multiplication_adjoint() {
        let g = Grid::new(1, 32).unwrap();
        let f = TestFunction::random_schwartz(1.0, 4).build(&g).unwrap();
        let u = multiplication_matrix(&f);
        let v = multiplication_matrix(&f.conj());
        for i in 0..32 {
            for j in 0..32 {
                assert!((v[(i, j)] - u[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_alpha() {
        let g = Grid::new(1, 32).unwrap();
        let r = alpha_full(&Field::zeros(&g), 1.0, Sign::Defocusing).unwrap();
        assert_eq!(r.alpha_full, 0.0);
        assert_eq!(r.raw_log_det, 0.0);
        assert_eq!(hs_norm_check(&Field::zeros(&g), 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn tail_series_matches_log() {
        for sign in [Sign::Focusing, Sign::Defocusing] {
            for z in [Complex64::new(0.1, 0.05), Complex64::new(0.6, -0.2)] {
                let direct = resummed(z, sign) - z - z * z * (series_sign(sign, 2) / 2.0);
                assert!((series_tail(z, sign) - direct).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn c_star_equals_kappa() {
        let g = Grid::new(8, 1024).unwrap();
        for kappa in [0.5, 1.0, 2.0] {
            let c = calibrate_c_star(kappa, &g).unwrap();
            assert!((c - kappa).abs() < 1e-10, "{c}");
        }
    }
}
