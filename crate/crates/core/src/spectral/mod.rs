//! Discrete function-space substrate: periodic grid, Fourier convention, fields,
//! time-sampled trajectories and a reproducible zoo of test functions.

mod field;
mod grid;
mod testfn;
mod trajectory;

pub use field::{Field, PLANCHEREL};
pub use grid::Grid;
pub use testfn::{indicator_bins, TestFunction, MIN_INDICATOR_BINS, RANDOM_SCHWARTZ_MODES};
pub use trajectory::Trajectory;

pub(crate) use field::lp_norm;
