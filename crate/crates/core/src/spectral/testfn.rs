use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// Highest trigonometric mode used by [`TestFunction::RandomSchwartz`].
pub const RANDOM_SCHWARTZ_MODES: i64 = 3;

/// Minimum number of bins a frequency indicator must cover.
pub const MIN_INDICATOR_BINS: usize = 8;

/// Reproducible initial data and probe functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `γ exp(-(x-c)²/(2w²))`
    Gaussian {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `γ sech(x-c)`
    Sech {
        amplitude: f64,
        #[serde(default)]
        center: f64,
    },
    /// `γ e^{i k₀ x}` with `k₀` on the lattice.
    PlaneWave { amplitude: f64, frequency: f64 },
    /// `γ (cos(k₁x) + cos(k₂x))`; the classical choice `k₂ = √2` is off any lattice.
    CosinePair {
        amplitude: f64,
        #[serde(default = "one")]
        first: f64,
        #[serde(default = "sqrt2")]
        second: f64,
    },
    /// Spectrum equal to 1 on the bins of `[start, start + width)`.
    FreqIndicator { start: f64, width: f64 },
    /// Gaussian envelope times a seeded trigonometric polynomial of degree 3.
    RandomSchwartz { amplitude: f64, seed: u64 },
}

fn one() -> f64 {
    1.0
}

fn sqrt2() -> f64 {
    SQRT_2
}

impl TestFunction {
    pub fn gaussian(amplitude: f64) -> Self {
        TestFunction::Gaussian {
            amplitude,
            center: 0.0,
            width: 1.0,
        }
    }

    pub fn random_schwartz(amplitude: f64, seed: u64) -> Self {
        TestFunction::RandomSchwartz { amplitude, seed }
    }

    pub fn build(&self, grid: &Grid) -> Result<Field> {
        match *self {
            TestFunction::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidParameter(format!("gaussian width {width}")));
                }
                Ok(Field::from_fn(grid, |x| {
                    let y = (x - center) / width;
                    Complex64::new(amplitude * (-0.5 * y * y).exp(), 0.0)
                }))
            }
            TestFunction::Sech { amplitude, center } => Ok(Field::from_fn(grid, |x| {
                Complex64::new(amplitude / (x - center).cosh(), 0.0)
            })),
            TestFunction::PlaneWave {
                amplitude,
                frequency,
            } => {
                grid.lattice_bin(frequency)
                    .ok_or(Error::OffLattice(frequency))?;
                Ok(Field::from_fn(grid, |x| {
                    Complex64::from_polar(amplitude, frequency * x)
                }))
            }
            TestFunction::CosinePair {
                amplitude,
                first,
                second,
            } => {
                for k in [first, second] {
                    grid.lattice_bin(k).ok_or(Error::OffLattice(k))?;
                }
                Ok(Field::from_fn(grid, |x| {
                    Complex64::new(amplitude * ((first * x).cos() + (second * x).cos()), 0.0)
                }))
            }
            TestFunction::FreqIndicator { start, width } => {
                let (lo, hi) = indicator_bins(grid, start, width)?;
                let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
                for m in lo..=hi {
                    spec[grid.index_of(m).expect("checked")] = Complex64::new(1.0, 0.0);
                }
                Field::from_spectrum(grid, spec)
            }
            TestFunction::RandomSchwartz { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let width = rng.random_range(0.8..1.25);
                let center = rng.random_range(-1.0..1.0);
                let coeffs: Vec<Complex64> = (-RANDOM_SCHWARTZ_MODES..=RANDOM_SCHWARTZ_MODES)
                    .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                Ok(Field::from_fn(grid, |x| {
                    let y = (x - center) / width;
                    let envelope = amplitude * (-0.5 * y * y).exp();
                    let poly: Complex64 = coeffs
                        .iter()
                        .zip(-RANDOM_SCHWARTZ_MODES..=RANDOM_SCHWARTZ_MODES)
                        .map(|(c, j)| c * Complex64::from_polar(1.0, j as f64 * x))
                        .sum();
                    poly * envelope
                }))
            }
        }
    }
}

/// Signed bin range `[lo, hi]` of an indicator on `[start, start + width)`.
pub fn indicator_bins(grid: &Grid, start: f64, width: f64) -> Result<(i64, i64)> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter(format!("indicator width {width}")));
    }
    let lo = grid.lattice_bin(start).ok_or(Error::OffLattice(start))?;
    let r = grid.periods() as f64;
    let hi = ((start + width) * r - 1e-9).ceil() as i64 - 1;
    let count = (hi - lo + 1).max(0) as usize;
    if count < MIN_INDICATOR_BINS {
        return Err(Error::InvalidParameter(format!(
            "indicator covers {count} bins, need at least {MIN_INDICATOR_BINS}"
        )));
    }
    if grid.index_of(hi).is_none() || hi >= (grid.len() / 2) as i64 - 1 {
        return Err(Error::OffLattice(start + width));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_has_eight_bins() {
        let g = Grid::new(8, 1024).unwrap();
        let f = TestFunction::FreqIndicator {
            start: 16.0,
            width: 1.0,
        }
        .build(&g)
        .unwrap();
        let nonzero = f.spectrum().iter().filter(|c| c.norm() > 1e-12).count();
        assert_eq!(nonzero, 8);
        for m in 128..136 {
            assert!((f.spectrum_at_bin(m) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn indicator_too_narrow_or_too_high() {
        let g = Grid::new(8, 1024).unwrap();
        let narrow = TestFunction::FreqIndicator {
            start: 16.0,
            width: 0.5,
        };
        assert!(narrow.build(&g).is_err());
        let high = TestFunction::FreqIndicator {
            start: 63.5,
            width: 1.0,
        };
        assert!(high.build(&g).is_err());
    }

    #[test]
    fn random_schwartz_is_reproducible() {
        let g = Grid::new(4, 256).unwrap();
        let a = TestFunction::random_schwartz(1.0, 3).build(&g).unwrap();
        let b = TestFunction::random_schwartz(1.0, 3).build(&g).unwrap();
        assert_eq!(a.values(), b.values());
        let c = TestFunction::random_schwartz(1.0, 4).build(&g).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn irrational_cosine_pair_rejected() {
        let g = Grid::new(1, 64).unwrap();
        let spec = TestFunction::CosinePair {
            amplitude: 1.0,
            first: 1.0,
            second: SQRT_2,
        };
        assert!(matches!(spec.build(&g), Err(Error::OffLattice(_))));
        let ok = TestFunction::CosinePair {
            amplitude: 1.0,
            first: 1.0,
            second: 2.0,
        };
        assert!(ok.build(&g).is_ok());
    }

    #[test]
    fn plane_wave_off_lattice_or_nyquist() {
        let g = Grid::new(1, 16).unwrap();
        assert!(TestFunction::PlaneWave { amplitude: 1.0, frequency: 0.5 }.build(&g).is_err());
        assert!(TestFunction::PlaneWave { amplitude: 1.0, frequency: 8.0 }.build(&g).is_err());
        assert!(TestFunction::PlaneWave { amplitude: 1.0, frequency: 7.0 }.build(&g).is_ok());
    }
}
