use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Lattice tolerance when deciding whether a real frequency sits on a bin.
const LATTICE_TOL: f64 = 1e-9;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    forward_padded: Arc<dyn Fft<f64>>,
    inverse_padded: Arc<dyn Fft<f64>>,
}

struct GridInner {
    periods: u32,
    points: usize,
    plans: Plans,
}

/// Periodic lattice of period `L = 2πR` with `M` nodes, standing in for the real line.
///
/// Nodes are `x_j = -L/2 + j dx`; frequencies are `ξ_m = m / R` for
/// `m ∈ [-M/2, M/2)`, stored in FFT order (non-negative first). Every integer
/// frequency lies on the lattice.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl Grid {
    pub fn new(periods: u32, points: usize) -> Result<Self> {
        if periods == 0 {
            return Err(Error::InvalidGrid("R must be a positive integer".into()));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "M = {points} must be a power of two and at least 16"
            )));
        }
        let nyquist = points as f64 / (2.0 * periods as f64);
        if nyquist < 4.0 {
            return Err(Error::InvalidGrid(format!(
                "Nyquist frequency {nyquist} < 4 leaves the unit frequency band under-resolved"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
            forward_padded: planner.plan_fft_forward(2 * points),
            inverse_padded: planner.plan_fft_inverse(2 * points),
        };
        Ok(Self {
            inner: Arc::new(GridInner {
                periods,
                points,
                plans,
            }),
        })
    }

    /// `R`, the number of 2π periods in the box (also the number of bins per unit frequency).
    pub fn periods(&self) -> u32 {
        self.inner.periods
    }

    /// `M`, the number of nodes.
    pub fn len(&self) -> usize {
        self.inner.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.inner.periods as f64
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.inner.points as f64
    }

    pub fn dxi(&self) -> f64 {
        1.0 / self.inner.periods as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length() + j as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }

    /// Signed bin number `m` of storage index `i`.
    pub fn signed_index(&self, i: usize) -> i64 {
        signed(i, self.len())
    }

    /// Storage index of signed bin `m`, if it lies in `[-M/2, M/2)`.
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let half = (self.len() / 2) as i64;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.len() as i64) as usize)
        }
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.signed_index(i) as f64 * self.dxi()
    }

    /// Frequencies in storage (FFT) order.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.xi(i)).collect()
    }

    /// Largest representable |ξ| (the bin at `-M/2`).
    pub fn nyquist(&self) -> f64 {
        self.len() as f64 / (2.0 * self.inner.periods as f64)
    }

    /// Signed bin of a real frequency, if it sits on the lattice strictly below Nyquist.
    pub fn lattice_bin(&self, xi: f64) -> Option<i64> {
        let scaled = xi * self.inner.periods as f64;
        let m = scaled.round();
        if (scaled - m).abs() > LATTICE_TOL {
            return None;
        }
        let m = m as i64;
        let half = (self.len() / 2) as i64;
        if m.abs() >= half {
            None
        } else {
            Some(m)
        }
    }

    pub(crate) fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        forward_with(&*self.inner.plans.forward, values, self.length())
    }

    pub(crate) fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        inverse_with(&*self.inner.plans.inverse, spectrum, self.dxi())
    }

    /// Physical samples on the 2× refined grid of a spectrum zero-padded to `2M` bins.
    fn padded_physical(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let m = self.len();
        let mut padded = vec![Complex64::new(0.0, 0.0); 2 * m];
        for (i, &c) in spectrum.iter().enumerate() {
            let s = self.signed_index(i);
            let j = if s >= 0 { s as usize } else { (2 * m as i64 + s) as usize };
            padded[j] = c;
        }
        inverse_with(&*self.inner.plans.inverse_padded, &padded, self.dxi())
    }

    /// Spectrum of 2×-grid samples, truncated back to the `M` resolved bins.
    fn truncate_padded(&self, physical: &[Complex64]) -> Vec<Complex64> {
        let m = self.len();
        let full = forward_with(&*self.inner.plans.forward_padded, physical, self.length());
        (0..m)
            .map(|i| {
                let s = self.signed_index(i);
                let j = if s >= 0 { s as usize } else { (2 * m as i64 + s) as usize };
                full[j]
            })
            .collect()
    }

    /// Dealiased spectrum of `a · conj(b) · c` from the three input spectra.
    ///
    /// Products of three `M`-bin band-limited functions alias only into bins
    /// discarded by the truncation when formed on the `2M` grid, so the
    /// retained bins equal the exact lattice convolution.
    pub(crate) fn cubic_product(
        &self,
        a: &[Complex64],
        b: &[Complex64],
        c: &[Complex64],
    ) -> Vec<Complex64> {
        let pa = self.padded_physical(a);
        let pb = self.padded_physical(b);
        let pc = self.padded_physical(c);
        let prod: Vec<Complex64> = pa
            .iter()
            .zip(&pb)
            .zip(&pc)
            .map(|((x, y), z)| x * y.conj() * z)
            .collect();
        self.truncate_padded(&prod)
    }

    /// Dealiased spectrum of the pointwise product `a · b`.
    pub(crate) fn product(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let pa = self.padded_physical(a);
        let pb = self.padded_physical(b);
        let prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        self.truncate_padded(&prod)
    }

    /// Accumulate `Σ a_i conj(b_i) c_i` over several triples sharing one padded transform back.
    pub(crate) fn cubic_sum(&self, triples: &[(&[Complex64], &[Complex64], &[Complex64])]) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); 2 * self.len()];
        for (a, b, c) in triples {
            let pa = self.padded_physical(a);
            let pb = self.padded_physical(b);
            let pc = self.padded_physical(c);
            for (((s, x), y), z) in acc.iter_mut().zip(&pa).zip(&pb).zip(&pc) {
                *s += x * y.conj() * z;
            }
        }
        self.truncate_padded(&acc)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.periods == other.inner.periods && self.inner.points == other.inner.points
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("periods", &self.inner.periods)
            .field("points", &self.inner.points)
            .finish()
    }
}

fn signed(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn parity_sign(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

// û_m = (L/P) (-1)^m Σ_j u_j e^{-2πi jm/P}; the (-1)^m accounts for x_0 = -L/2.
fn forward_with(plan: &dyn Fft<f64>, values: &[Complex64], length: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    plan.process(&mut buf);
    let h = length / n as f64;
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= h * parity_sign(signed(i, n));
    }
    buf
}

// u_j = (dξ/2π) Σ_m û_m (-1)^m e^{2πi jm/P}.
fn inverse_with(plan: &dyn Fft<f64>, spectrum: &[Complex64], dxi: f64) -> Vec<Complex64> {
    let n = spectrum.len();
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(i, &c)| c * parity_sign(signed(i, n)))
        .collect();
    plan.process(&mut buf);
    let scale = dxi / (2.0 * PI);
    for v in buf.iter_mut() {
        *v *= scale;
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_lattice() {
        let g = Grid::new(1, 16).unwrap();
        assert!((g.length() - 2.0 * PI).abs() < 1e-15);
        assert_eq!(g.dxi(), 1.0);
        let mut xs: Vec<i64> = (0..16).map(|i| g.signed_index(i)).collect();
        xs.sort();
        assert_eq!(xs, (-8..8).collect::<Vec<_>>());
    }

    #[test]
    fn integer_frequencies_on_every_fourth_bin() {
        let g = Grid::new(4, 256).unwrap();
        assert_eq!(g.dxi(), 0.25);
        for k in -30..30 {
            let m = g.lattice_bin(k as f64).unwrap();
            assert_eq!(m.rem_euclid(4), 0);
        }
        assert!(g.lattice_bin(0.1).is_none());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(1, 17).is_err());
        assert!(Grid::new(1, 8).is_err());
        assert!(Grid::new(0, 64).is_err());
        // Nyquist 2 < 4
        assert!(Grid::new(8, 32).is_err());
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(2, 64).unwrap();
        for i in 0..64 {
            assert_eq!(g.index_of(g.signed_index(i)), Some(i));
        }
        assert_eq!(g.index_of(32), None);
        assert_eq!(g.index_of(-32), Some(32));
    }
}
