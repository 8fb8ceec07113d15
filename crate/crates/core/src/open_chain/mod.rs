//! Truncated Krylov chains: boundary closures, spectra and time evolution.

mod evolve;
mod liouvillian;
mod spectrum;

pub use evolve::{
    autocorrelation, default_dt, evolve, trajectory_csv, uniform_grid, ChainState, EvolveOptions, Propagator,
    DENSE_EXPM_MAX,
};
pub use liouvillian::{build_liouvillian, BoundaryKind, OpenLiouvillian};
pub(crate) use spectrum::median;
pub use spectrum::{
    classify, default_eps_perpetual, spectrum, ModeClass, SpectralMode, Spectrum, SpectrumOptions, DENSE_CEILING,
    RESIDUAL_TOL,
};
