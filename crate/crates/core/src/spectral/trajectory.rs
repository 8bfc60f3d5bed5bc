use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Field, Grid};

/// Fields sampled on a uniform time slab `t_i = t_0 + i·dt`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    start: f64,
    step: f64,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn new(start: f64, step: f64, states: Vec<Field>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
        if states.len() > 1 && !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {step} must be positive")));
        }
        if states.iter().any(|s| s.grid() != first.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            start,
            step,
            states,
        })
    }

    /// Zero trajectory on the slab of `like`.
    pub fn zeros_like(like: &Trajectory) -> Self {
        let z = Field::zeros(like.grid());
        Self {
            start: like.start,
            step: like.step,
            states: vec![z; like.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn state(&self, i: usize) -> &Field {
        &self.states[i]
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("non-empty")
    }

    pub fn into_states(self) -> Vec<Field> {
        self.states
    }

    /// Same grid, same start, same step and same number of slices.
    pub fn same_slab(&self, other: &Trajectory) -> bool {
        self.len() == other.len()
            && self.grid() == other.grid()
            && (self.start - other.start).abs() <= 1e-14 * (1.0 + self.start.abs())
            && (self.len() == 1 || (self.step - other.step).abs() <= 1e-14 * self.step)
    }

    pub fn map(&self, f: impl Fn(usize, &Field) -> Field) -> Trajectory {
        let states = self.states.iter().enumerate().map(|(i, s)| f(i, s)).collect();
        Trajectory {
            start: self.start,
            step: self.step,
            states,
        }
    }

    pub fn zip_with(
        &self,
        other: &Trajectory,
        f: impl Fn(&Field, &Field) -> Result<Field>,
    ) -> Result<Trajectory> {
        if !self.same_slab(other) {
            return Err(Error::SlabMismatch);
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            start: self.start,
            step: self.step,
            states,
        })
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn scaled(&self, gamma: Complex64) -> Trajectory {
        self.map(|_, s| s.scaled(gamma))
    }

    /// `sup_t ‖a(t) - b(t)‖_{L²}` over the stored slices.
    pub fn linf_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        if !self.same_slab(other) {
            return Err(Error::SlabMismatch);
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.states.iter().zip(&other.states) {
            worst = worst.max(a.l2_distance(b)?);
        }
        Ok(worst)
    }

    /// `sup_t ‖a(t)‖_{L²}`.
    pub fn linf_l2_norm(&self) -> f64 {
        self.states.iter().map(Field::l2_norm).fold(0.0, f64::max)
    }

    /// Keep every `stride`-th slice (the first and, if aligned, last are kept).
    pub fn subsample(&self, stride: usize) -> Result<Trajectory> {
        if stride == 0 || !(self.len() - 1).is_multiple_of(stride) {
            return Err(Error::InvalidParameter(format!(
                "stride {stride} does not divide {} intervals",
                self.len() - 1
            )));
        }
        let states = self.states.iter().step_by(stride).cloned().collect();
        Ok(Trajectory {
            start: self.start,
            step: self.step * stride as f64,
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_times_and_slab_checks() {
        let g = Grid::new(1, 16).unwrap();
        let z = Field::zeros(&g);
        let t = Trajectory::new(0.0, 0.25, vec![z.clone(); 5]).unwrap();
        assert_eq!(t.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let u = Trajectory::new(0.0, 0.5, vec![z.clone(); 5]).unwrap();
        assert!(!t.same_slab(&u));
        assert!(matches!(t.linf_l2_distance(&u), Err(Error::SlabMismatch)));
        let s = t.subsample(2).unwrap();
        assert_eq!(s.times(), vec![0.0, 0.5, 1.0]);
        assert!(t.subsample(3).is_err());
    }

    #[test]
    fn rejects_mixed_grids() {
        let a = Field::zeros(&Grid::new(1, 16).unwrap());
        let b = Field::zeros(&Grid::new(1, 32).unwrap());
        assert!(matches!(Trajectory::new(0.0, 1.0, vec![a, b]), Err(Error::GridMismatch)));
    }
}
