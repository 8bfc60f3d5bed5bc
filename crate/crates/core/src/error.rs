use thiserror::Error;

/// Errors raised by the laboratory's numerical operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {0} is off the lattice or at/beyond Nyquist")]
    OffLattice(f64),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("window index {k} outside |k| <= {k_max}")]
    WindowIndex { k: i64, k_max: i64 },

    #[error("spectral tail beyond |xi| = {cutoff} carries {fraction:.3e} of the energy")]
    TailTooHeavy { cutoff: f64, fraction: f64 },

    #[error("exponent relation violated: {0}")]
    ExponentRelationViolated(String),

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("trajectories do not share a time slab")]
    SlabMismatch,

    #[error("Picard depth {0} exceeds the supported maximum of 9 (or is even)")]
    DepthTooLarge(usize),

    #[error("bandwidth overflow: {0}")]
    BandwidthOverflow(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
}

pub type Result<T> = std::result::Result<T, Error>;
