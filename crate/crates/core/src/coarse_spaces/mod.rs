//! Spectral coarse spaces: local generalized eigenproblems, the global
//! coarse basis and the local projections used by the two-threshold
//! preconditioner.

pub mod basis;
pub mod gevp;
pub mod projectors;
pub mod robin;

pub use basis::{assemble_coarse_basis, CoarseSpace, ColumnProvenance};
pub use gevp::{
    annex_harmonicity_residual, solve_annex_gevp, solve_geneo2_lower_gevp,
    solve_geneo2_upper_gevp, solve_geneo_gevp, solve_threshold_pencil, weighted_local_matrix,
    EigenPairSet, GevpKind, Selection,
};
pub use projectors::{
    apply_projection, apply_pseudo_inverse_B, BOrthogonalProjector, LocalBKind, LocalProjectors,
    ProjectionKind, SubdomainProjectors,
};
pub use robin::{build_robin_matrix, interface_measure};
