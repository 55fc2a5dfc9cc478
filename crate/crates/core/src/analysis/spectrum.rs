//! Dense spectra of preconditioned operators.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::dense::{cholesky, symmetrize, sym_eigen};
use crate::error::{Error, Result};
use crate::preconditioner::{densify, Preconditioner};
use crate::sparse::SparseSymMatrix;

/// Default size cap of the dense spectrum.
pub const SPECTRUM_CAP: usize = 3000;

/// Eigenvalues of `M^-1 A`, ascending, with `M^-1` the action of `p`.
pub fn operator_spectrum(a: &SparseSymMatrix, p: &dyn Preconditioner, cap: usize) -> Result<Vec<f64>> {
    let n = a.order();
    if n > cap {
        return Err(Error::TooLarge { order: n, cap });
    }
    if p.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.order(),
        });
    }
    preconditioned_spectrum(&a.to_dense(), &densify(p))
}

/// Eigenvalues of `P A` for SPD `A` and symmetric `P`, computed as those of
/// `C^T P C` with `A = C C^T`.
pub fn preconditioned_spectrum(a: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.shape() != p.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: p.nrows(),
        });
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let c = cholesky(a)
        .ok_or_else(|| Error::NotPositiveDefinite("A".into()))?
        .l();
    Ok(sym_eigen(&symmetrize(&(c.transpose() * p * &c))).values)
}

/// `max / min` of a positive spectrum.
pub fn condition_number(spectrum: &[f64]) -> f64 {
    match (spectrum.first(), spectrum.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}
