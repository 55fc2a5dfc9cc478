#![no_std]
//! Overlapping Schwarz preconditioners with spectral (GenEO-type) coarse
//! spaces and inexact coarse solves, for P1 discretisations of
//! `-div(K grad u) = f` on structured 1D and 2D meshes.

extern crate alloc;
#[cfg(test)]
extern crate std;
pub mod analysis;

pub mod assembly;
pub mod coarse_spaces;
pub mod coarse_operator;
pub mod coefficient;
pub mod decomposition;
pub mod dense;
pub mod error;
pub mod experiment;
pub mod mesh;
pub mod preconditioner;
pub mod sparse;

pub use error::{Error, Result};
