//! Krylov solves, spectra of preconditioned operators and the theoretical
//! bounds they are checked against.

pub mod bounds;
pub mod pcg;
pub mod spectrum;

pub use bounds::{
    bounds_geneo, bounds_geneo2, bounds_geneo2_nonrobust, check_bounds, optannexe_min,
    optimised_upper_constant, BoundConstants,
    BoundMethod, SpectralBoundReport,
};
pub use pcg::{cg_iteration_bound, lanczos_extremes, pcg_solve, ConvergenceHistory};
pub use spectrum::{condition_number, operator_spectrum, preconditioned_spectrum, SPECTRUM_CAP};
