//! Merging selected local eigenvectors into the global coarse basis `Z`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use super::gevp::{EigenPairSet, GevpKind};
use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::dense::independent_columns;
use crate::error::{Error, Result};

/// Relative tolerance of the rank cleanup.
pub const BASIS_RTOL: f64 = 1e-10;

/// Origin of one coarse basis column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnProvenance {
    pub subdomain: usize,
    pub kind: GevpKind,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct CoarseSpace {
    z: DMatrix<f64>,
    provenance: Vec<ColumnProvenance>,
    candidates: usize,
}

impl CoarseSpace {
    /// Wraps an explicit basis; columns are checked for independence but
    /// not altered.
    pub fn from_basis(z: DMatrix<f64>, provenance: Vec<ColumnProvenance>) -> Result<Self> {
        if provenance.len() != z.ncols() {
            return Err(Error::DimensionMismatch {
                expected: z.ncols(),
                got: provenance.len(),
            });
        }
        let kept = independent_columns(&z, BASIS_RTOL);
        if kept.len() != z.ncols() {
            return Err(Error::RankDefect(alloc::format!(
                "{} of {} columns are independent",
                kept.len(),
                z.ncols()
            )));
        }
        let candidates = z.ncols();
        Ok(Self {
            z,
            provenance,
            candidates,
        })
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_dofs(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    pub fn provenance(&self) -> &[ColumnProvenance] {
        &self.provenance
    }

    /// Number of candidate columns before rank cleanup.
    pub fn candidates(&self) -> usize {
        self.candidates
    }

    /// Columns removed by the cleanup.
    pub fn dropped(&self) -> usize {
        self.candidates - self.z.ncols()
    }

    /// Orthonormal basis `Q` of the same span with `Z = Q R`, `R` upper
    /// triangular with positive diagonal. `Z E~^-1 Z^T` is unchanged when
    /// `Z` is replaced by `Q` and `E~` by `R^-T E~ R^-1`; the exact and
    /// spectrally perturbed coarse solves commute with this change of basis,
    /// and `Q^T A Q` is far better conditioned than `Z^T A Z` when selected
    /// vectors are nearly parallel.
    pub fn orthonormal_z(&self) -> DMatrix<f64> {
        let (n, m) = self.z.shape();
        if m == 0 {
            return DMatrix::zeros(n, 0);
        }
        let qr = self.z.clone().qr();
        let mut q = qr.q();
        let r = qr.r();
        for k in 0..m {
            if r[(k, k)] < 0.0 {
                q.column_mut(k).neg_mut();
            }
        }
        q
    }
}

/// Builds `Z` from the selected eigenvectors: one candidate column
/// `R_j^T D_j v` per selected pair, merged in (subdomain, descending
/// eigenvalue) order, then dependent columns are dropped.
///
/// `decomposition`/`pou` must be the ones the eigenproblems were posed on
/// (the extended pair for the annex variant).
pub fn assemble_coarse_basis(
    sets: &[EigenPairSet],
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
) -> Result<CoarseSpace> {
    let n = decomposition.n_dofs();
    let mut entries: Vec<(usize, f64, usize, usize)> = Vec::new();
    for (s, set) in sets.iter().enumerate() {
        let dofs = decomposition.subdomain(set.subdomain)?.dofs.len();
        if set.order() != dofs {
            return Err(Error::DimensionMismatch {
                expected: dofs,
                got: set.order(),
            });
        }
        for k in set.selected_indices() {
            entries.push((set.subdomain, set.values[k], s, k));
        }
    }
    // stable: equal keys keep the input order
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));

    let mut candidates = DMatrix::zeros(n, entries.len());
    let mut provenance = Vec::with_capacity(entries.len());
    for (c, &(j, value, s, k)) in entries.iter().enumerate() {
        let v: DVector<f64> = sets[s].vectors.column(k).component_mul(pou.weights(j));
        candidates.set_column(c, &decomposition.prolong(j, &v));
        provenance.push(ColumnProvenance {
            subdomain: j,
            kind: sets[s].kind,
            eigenvalue: value,
        });
    }
    let kept = independent_columns(&candidates, BASIS_RTOL);
    Ok(CoarseSpace {
        z: candidates.select_columns(&kept),
        provenance: kept.iter().map(|&c| provenance[c]).collect(),
        candidates: entries.len(),
    })
}
