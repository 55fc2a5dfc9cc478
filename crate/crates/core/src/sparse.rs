//! Compressed-row storage for symmetric sparse matrices.
//!
//! The full (both triangles) pattern is stored so that products and
//! principal submatrix extraction are plain row sweeps.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// What is known about the definiteness of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    Spd,
    Spsd,
    Unknown,
}

/// Symmetric sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    definiteness: Definiteness,
}

/// Relative tolerance for value symmetry.
pub const SYMMETRY_RTOL: f64 = 1e-14;

impl SparseSymMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// in input order, so the result only depends on the triplet sequence.
    pub fn from_triplets(
        order: usize,
        triplets: &[(usize, usize, f64)],
        definiteness: Definiteness,
    ) -> Result<Self> {
        let mut counts = vec![0usize; order + 1];
        for &(i, j, _) in triplets {
            if i >= order || j >= order {
                return Err(Error::DimensionMismatch {
                    expected: order,
                    got: i.max(j) + 1,
                });
            }
            counts[i + 1] += 1;
        }
        for i in 0..order {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let slot = fill[i];
            cols[slot] = j;
            vals[slot] = v;
            fill[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(order + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for i in 0..order {
            scratch.clear();
            scratch.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            // stable: duplicates keep their input order before summation
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut sum = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    sum += scratch[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }

        let m = Self {
            order,
            row_ptr,
            col_idx,
            values,
            definiteness,
        };
        m.check_symmetry()?;
        Ok(m)
    }

    /// Converts a dense symmetric matrix, dropping exact zeros off the diagonal.
    pub fn from_dense(dense: &DMatrix<f64>, definiteness: Definiteness) -> Result<Self> {
        if dense.nrows() != dense.ncols() {
            return Err(Error::DimensionMismatch {
                expected: dense.nrows(),
                got: dense.ncols(),
            });
        }
        let n = dense.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = dense[(i, j)];
                if v != 0.0 || i == j {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &triplets, definiteness)
    }

    fn check_symmetry(&self) -> Result<()> {
        let scale = self.max_abs();
        for i in 0..self.order {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let vij = self.values[k];
                let vji = match self.position(j, i) {
                    Some(p) => self.values[p],
                    None => {
                        return Err(Error::NotSymmetric {
                            row: i,
                            col: j,
                            defect: vij.abs(),
                        })
                    }
                };
                let defect = (vij - vji).abs();
                if defect > SYMMETRY_RTOL * scale {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        defect,
                    });
                }
            }
        }
        Ok(())
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn definiteness(&self) -> Definiteness {
        self.definiteness
    }

    pub fn with_definiteness(mut self, definiteness: Definiteness) -> Self {
        self.definiteness = definiteness;
        self
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Iterates over the stored `(col, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Upper-triangle-free iterator `(i, j, v)` with `i >= j`, row-major.
    pub fn lower_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.order).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j <= i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.order, |i, _| self.get(i, i))
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.order, "sparse matvec length mismatch");
        DVector::from_fn(self.order, |i, _| {
            self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()
        })
    }

    /// `A * X` for a dense block of column vectors.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.order, "sparse matmul shape mismatch");
        let mut out = DMatrix::zeros(self.order, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.order {
                out[(i, c)] = self.row(i).map(|(j, v)| v * x[(j, c)]).sum::<f64>();
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.order, self.order);
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Principal submatrix `R A R^T` for the sorted index set `indices`.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SparseSymMatrix {
        let mut local = vec![usize::MAX; self.order];
        for (k, &g) in indices.iter().enumerate() {
            local[g] = k;
        }
        let mut row_ptr = Vec::with_capacity(indices.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &g in indices {
            let mut entries: Vec<(usize, f64)> = self
                .row(g)
                .filter_map(|(j, v)| (local[j] != usize::MAX).then_some((local[j], v)))
                .collect();
            entries.sort_by_key(|&(c, _)| c);
            for (c, v) in entries {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        // principal submatrices inherit (semi-)definiteness
        let definiteness = self.definiteness;
        SparseSymMatrix {
            order: indices.len(),
            row_ptr,
            col_idx,
            values,
            definiteness,
        }
    }

    pub fn scaled(&self, c: f64) -> SparseSymMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= c);
        m
    }

    /// Sum `self + c * other`; both must have the same order.
    pub fn add_scaled(&self, other: &SparseSymMatrix, c: f64) -> Result<SparseSymMatrix> {
        if self.order != other.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                got: other.order,
            });
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.order {
            triplets.extend(self.row(i).map(|(j, v)| (i, j, v)));
            triplets.extend(other.row(i).map(|(j, v)| (i, j, c * v)));
        }
        Self::from_triplets(self.order, &triplets, Definiteness::Unknown)
    }
}
