//! Pseudospectral laboratory for the cubic nonlinear Schrödinger equation on a
//! large torus: modulation-space norms, split-step dynamics, Picard iterates,
//! the perturbation-determinant conserved quantities and the `ũ + v` splitting.

pub mod error;
pub mod fit;
pub mod gwp;
pub mod integrable;
pub mod modspace;
pub mod nls;
pub mod spectral;

pub use error::{Error, Result};
pub use modspace::{ModParams, WindowFamily, WindowInvariants};
pub use nls::{PicardSet, Sign, SolverConfig};
pub use spectral::{Field, Grid, TestFunction, Trajectory};
