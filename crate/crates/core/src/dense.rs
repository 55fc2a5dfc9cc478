//! Dense kernels: sorted symmetric eigensolves, symmetric pencils with a
//! possibly singular right-hand matrix, and rank-revealing column selection.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below `KERNEL_RTOL * max|eig|` are treated as zero.
pub const KERNEL_RTOL: f64 = 1e-11;

/// Right-hand matrices whose smallest eigenvalue is below this (relative)
/// are rejected as not semi-definite.
pub const SEMIDEFINITE_RTOL: f64 = 1e-10;

pub type DenseCholesky = Cholesky<f64, Dyn>;

/// Eigen-decomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Max absolute column sum; bounds the spectral norm of a symmetric matrix.
pub fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn sym_eigen(m: &DMatrix<f64>) -> SortedEigen {
    let n = m.nrows();
    if n == 0 {
        return SortedEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    SortedEigen { values, vectors }
}

pub fn cholesky(m: &DMatrix<f64>) -> Option<DenseCholesky> {
    Cholesky::new(symmetrize(m))
}

/// Definiteness as seen by the pencil solver: every eigenvalue above
/// `KERNEL_RTOL` times the largest one. Stricter than Cholesky success,
/// which can pass on singular matrices through rounding.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let v = sym_eigen(m).values;
    let top = v[v.len() - 1];
    top > 0.0 && v[0] > KERNEL_RTOL * top
}

/// How a direction of a pencil `L v = lambda R v` was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilClass {
    Finite,
    /// `R v = 0` with `v^T L v > 0`: eigenvalue `+inf`.
    Infinite,
}

/// Solution of a symmetric pencil with `R` semi-definite.
///
/// `vectors` holds unit-norm eigenvectors ordered by descending eigenvalue
/// (infinite ones first). Directions in the common kernel of `L` and `R`
/// carry no eigenvalue and are returned separately in `degenerate`; together
/// with `vectors` they form a basis of the whole space.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    pub classes: Vec<PencilClass>,
    pub vectors: DMatrix<f64>,
    pub degenerate: DMatrix<f64>,
}

impl PencilEigen {
    pub fn order(&self) -> usize {
        self.vectors.nrows()
    }

    /// Full basis `[vectors | degenerate]`.
    pub fn basis(&self) -> DMatrix<f64> {
        let n = self.order();
        let m = self.vectors.ncols();
        let d = self.degenerate.ncols();
        DMatrix::from_fn(n, m + d, |i, j| {
            if j < m {
                self.vectors[(i, j)]
            } else {
                self.degenerate[(i, j - m)]
            }
        })
    }
}

/// Solves `L v = lambda R v` for symmetric `L` and symmetric positive
/// semi-definite `R`.
///
/// `R` is diagonalised first. On its range the pencil is reduced to a
/// standard symmetric problem on the Schur complement of `L` with respect to
/// the kernel block; kernel directions of `R` on which `L` is nonzero get
/// eigenvalue `+inf`, and directions in both kernels are split off as
/// degenerate.
pub fn symmetric_pencil(l: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<PencilEigen> {
    let n = r.nrows();
    if l.nrows() != n || l.ncols() != n || r.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: l.nrows(),
        });
    }
    if n == 0 {
        return Ok(PencilEigen {
            values: Vec::new(),
            classes: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
            degenerate: DMatrix::zeros(0, 0),
        });
    }

    let re = sym_eigen(r);
    let rmax = re.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if rmax > 0.0 && re.values[0] < -SEMIDEFINITE_RTOL * rmax {
        return Err(Error::NotSemiDefinite(re.values[0]));
    }
    let cut = KERNEL_RTOL * rmax;
    let range_idx: Vec<usize> = (0..n).filter(|&k| re.values[k] > cut).collect();
    let kernel_idx: Vec<usize> = (0..n).filter(|&k| re.values[k] <= cut).collect();
    let q_range = re.vectors.select_columns(&range_idx);
    let q_kernel = re.vectors.select_columns(&kernel_idx);

    // Split the kernel of R by the action of L on it.
    let lscale = one_norm(l);
    let l_kk = q_kernel.transpose() * l * &q_kernel;
    let ke = sym_eigen(&l_kk);
    let lcut = KERNEL_RTOL * lscale;
    let inf_idx: Vec<usize> = (0..ke.values.len())
        .filter(|&k| ke.values[k].abs() > lcut)
        .collect();
    let deg_idx: Vec<usize> = (0..ke.values.len())
        .filter(|&k| ke.values[k].abs() <= lcut)
        .collect();
    let q_inf = &q_kernel * ke.vectors.select_columns(&inf_idx);
    let omega: Vec<f64> = inf_idx.iter().map(|&k| ke.values[k]).collect();
    let degenerate = &q_kernel * ke.vectors.select_columns(&deg_idx);

    // Schur complement of L on range(R), scaled by the range eigenvalues.
    let l_rr = q_range.transpose() * l * &q_range;
    let l_ir = q_inf.transpose() * l * &q_range;
    let mut schur = l_rr;
    for (a, &w) in omega.iter().enumerate() {
        let row = l_ir.row(a).clone_owned();
        schur -= row.transpose() * row / w;
    }
    let inv_sqrt: Vec<f64> = range_idx.iter().map(|&k| 1.0 / re.values[k].sqrt()).collect();
    let scaled = DMatrix::from_fn(schur.nrows(), schur.ncols(), |i, j| {
        schur[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
    });
    let se = sym_eigen(&scaled);

    // Back-transform: v = Q_r b - Q_inf diag(omega)^-1 (Q_inf^T L Q_r b).
    let mut b = se.vectors;
    for (i, s) in inv_sqrt.iter().enumerate() {
        b.row_mut(i).scale_mut(*s);
    }
    let mut finite = &q_range * &b;
    if !omega.is_empty() {
        let mut coupling = &l_ir * &b;
        for (a, &w) in omega.iter().enumerate() {
            coupling.row_mut(a).scale_mut(1.0 / w);
        }
        finite -= &q_inf * coupling;
    }

    let n_inf = q_inf.ncols();
    let n_fin = finite.ncols();
    let mut values = Vec::with_capacity(n_inf + n_fin);
    let mut classes = Vec::with_capacity(n_inf + n_fin);
    let mut vectors = DMatrix::zeros(n, n_inf + n_fin);
    for k in 0..n_inf {
        values.push(f64::INFINITY);
        classes.push(PencilClass::Infinite);
        vectors.set_column(k, &q_inf.column(k));
    }
    // descending finite eigenvalues
    for (slot, k) in (0..n_fin).rev().enumerate() {
        values.push(se.values[k]);
        classes.push(PencilClass::Finite);
        let col = finite.column(k);
        let norm = col.norm();
        vectors.set_column(n_inf + slot, &(col / norm));
    }
    Ok(PencilEigen {
        values,
        classes,
        vectors,
        degenerate,
    })
}

/// Relative residual of one eigenpair, normalised as
/// `|L v - lambda R v| / ((|L| + |lambda| |R|) |v|)`. For infinite pairs the
/// residual is `|R v| / (|R| |v|)`.
pub fn pencil_residual(l: &DMatrix<f64>, r: &DMatrix<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    let vn = v.norm();
    if vn == 0.0 {
        return 0.0;
    }
    if lambda.is_infinite() {
        let rn = one_norm(r);
        return if rn == 0.0 { 0.0 } else { (r * v).norm() / (rn * vn) };
    }
    let denom = (one_norm(l) + lambda.abs() * one_norm(r)) * vn;
    if denom == 0.0 {
        return 0.0;
    }
    (l * v - r * v * lambda).norm() / denom
}

/// Selects a linearly independent subset of the columns of `m` by pivoted
/// Gram-Schmidt. A column is dropped once its component orthogonal to the
/// kept ones falls below `rtol` times its own norm. Indices are returned in
/// ascending order, so the kept columns keep their original ordering.
pub fn independent_columns(m: &DMatrix<f64>, rtol: f64) -> Vec<usize> {
    let ncols = m.ncols();
    let norms: Vec<f64> = m.column_iter().map(|c| c.norm()).collect();
    let mut work = m.clone();
    let mut alive: Vec<bool> = norms.iter().map(|&n| n > 0.0).collect();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    loop {
        let mut best = None;
        let mut best_ratio = rtol;
        for j in 0..ncols {
            if !alive[j] {
                continue;
            }
            let ratio = work.column(j).norm() / norms[j];
            if ratio > best_ratio {
                best_ratio = ratio;
                best = Some(j);
            }
        }
        let Some(p) = best else { break };
        let mut q = work.column(p).clone_owned();
        for b in &basis {
            let c = b.dot(&q);
            q.axpy(-c, b, 1.0);
        }
        q /= q.norm();
        alive[p] = false;
        kept.push(p);
        for j in 0..ncols {
            if alive[j] {
                let c = q.dot(&work.column(j));
                let mut col = work.column_mut(j);
                col.axpy(-c, &q, 1.0);
            }
        }
        basis.push(q);
    }
    kept.sort_unstable();
    kept
}

/// Solves `m x = b` for a small dense square system via LU.
pub fn lu_solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NotPositiveDefinite("singular system in LU solve".into()))
}
