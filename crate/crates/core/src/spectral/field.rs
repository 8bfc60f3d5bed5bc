use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::Grid;

/// Complex samples `u(x_j)` on a [`Grid`], with a lazily cached spectrum.
///
/// The spectrum uses the continuum-normalized convention
/// `û(ξ) = ∫ e^{-ixξ} u(x) dx ≈ dx Σ_j e^{-i x_j ξ} u(x_j)`, with `2π` in the inverse.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Field {
    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self {
            grid: grid.clone(),
            values,
            spectrum: OnceLock::new(),
        }
    }

    /// Build a field from its spectrum (FFT storage order).
    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} bins for a grid of {} points",
                spectrum.len(),
                grid.len()
            )));
        }
        let values = grid.inverse(&spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(Self {
            grid: grid.clone(),
            values,
            spectrum: cache,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_values(grid, vec![Complex64::new(0.0, 0.0); grid.len()]).expect("sized")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `(Σ_j |u_j|^p dx)^{1/p}`; `p = ∞` gives the max modulus.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(&self.values, p, self.grid.dx())
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `Σ_j |u_j|² dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// `Σ_m |û_m|² dξ`, which equals `2π · mass()` by Plancherel.
    pub fn spectral_energy(&self) -> f64 {
        self.spectrum().iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dxi()
    }

    pub fn scaled(&self, gamma: Complex64) -> Field {
        let values = self.values.iter().map(|v| v * gamma).collect();
        Field::from_values(&self.grid, values).expect("sized")
    }

    pub fn scaled_real(&self, gamma: f64) -> Field {
        self.scaled(Complex64::new(gamma, 0.0))
    }

    pub fn conj(&self) -> Field {
        let values = self.values.iter().map(|v| v.conj()).collect();
        Field::from_values(&self.grid, values).expect("sized")
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::from_values(&self.grid, values)
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Field {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Field::from_values(&self.grid, values).expect("sized")
    }

    /// Multiply the spectrum bin-by-bin by `multiplier(ξ)`.
    pub fn apply_multiplier(&self, multiplier: impl Fn(f64) -> Complex64) -> Field {
        let spec = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| c * multiplier(self.grid.xi(i)))
            .collect();
        Field::from_spectrum(&self.grid, spec).expect("sized")
    }

    /// Spectral derivative `∂_x u`.
    pub fn derivative(&self) -> Field {
        self.apply_multiplier(|xi| Complex64::new(0.0, xi))
    }

    /// Grid `L²` distance `(Σ |u - v|² dx)^{1/2}`.
    pub fn l2_distance(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.l2_norm())
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Fraction of the mass sitting within `L/4` of the box boundary (`|x| ≥ L/4`).
    pub fn boundary_mass_fraction(&self) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let quarter = 0.25 * self.grid.length();
        let edge: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.x(*j).abs() >= quarter)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        edge / total
    }

    /// Fraction of `Σ|û|²` carried by bins with `|ξ| > cutoff`.
    pub fn spectral_tail_fraction(&self, cutoff: f64) -> f64 {
        let spec = self.spectrum();
        let total: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = spec
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.xi(*i).abs() > cutoff + 1e-12)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        tail / total
    }

    /// Spectrum value at signed bin `m` (zero outside the stored band).
    pub fn spectrum_at_bin(&self, m: i64) -> Complex64 {
        match self.grid.index_of(m) {
            Some(i) => self.spectrum()[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("l2", &self.l2_norm())
            .finish()
    }
}

pub(crate) fn lp_norm(values: &[Complex64], p: f64, dx: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    if p == 2.0 {
        return Ok((values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt());
    }
    if p == 1.0 {
        return Ok(values.iter().map(|v| v.norm()).sum::<f64>() * dx);
    }
    // Scale by the max to keep |u|^p representable for large p.
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v.norm() / peak).powf(p)).sum();
    Ok(peak * (s * dx).powf(1.0 / p))
}

/// `2π`, the Plancherel constant of the chosen transform convention.
pub const PLANCHEREL: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TestFunction;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_field_has_zero_spectrum_and_norms() {
        let g = Grid::new(2, 64).unwrap();
        let z = Field::zeros(&g);
        assert!(z.spectrum().iter().all(|v| v.norm() == 0.0));
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(z.lp_norm(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn gaussian_spectrum_matches_closed_form() {
        let g = Grid::new(8, 1024).unwrap();
        let f = Field::from_fn(&g, |x| c((-x * x / 2.0).exp()));
        let spec = f.spectrum();
        for (i, v) in spec.iter().enumerate() {
            let xi = g.xi(i);
            if xi.abs() <= 10.0 {
                let exact = (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp();
                assert!((v - c(exact)).norm() < 1e-10, "xi={xi}");
            }
        }
    }

    #[test]
    fn constant_lp_norms() {
        let g = Grid::new(1, 64).unwrap();
        let one = Field::from_fn(&g, |_| c(1.0));
        let l = g.length();
        for p in [1.0, 2.0, 3.0, 7.5] {
            let n = one.lp_norm(p).unwrap();
            assert!((n - l.powf(1.0 / p)).abs() < 1e-12 * n);
        }
        assert_eq!(one.lp_norm(f64::INFINITY).unwrap(), 1.0);
        assert!(one.lp_norm(0.5).is_err());
    }

    #[test]
    fn gaussian_l2_norm() {
        let g = Grid::new(8, 1024).unwrap();
        let f = Field::from_fn(&g, |x| c((-x * x / 2.0).exp()));
        let exact = PI.powf(0.25);
        assert!((f.lp_norm(2.0).unwrap() - exact).abs() < 1e-8);
        assert!((exact - 1.33133).abs() < 1e-5);
    }

    #[test]
    fn roundtrip_and_plancherel_random_schwartz() {
        let g = Grid::new(4, 256).unwrap();
        let f = TestFunction::random_schwartz(1.0, 7).build(&g).unwrap();
        let back = Field::from_spectrum(&g, f.spectrum().to_vec()).unwrap();
        let rel = f.l2_distance(&back).unwrap() / f.l2_norm();
        assert!(rel < 1e-12, "{rel}");
        let lhs = f.spectral_energy();
        let rhs = PLANCHEREL * f.mass();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = Grid::new(2, 64).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(0.0, 3.0 * x).exp());
        let d = f.derivative();
        let expected = f.scaled(Complex64::new(0.0, 3.0));
        assert!(d.max_abs_diff(&expected).unwrap() < 1e-11);
    }
}
