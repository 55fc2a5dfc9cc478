//! Dense incomplete Cholesky with threshold dropping.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

/// Diagonal shift (relative to `diag(E)`) tried after the first breakdown.
pub const INITIAL_SHIFT: f64 = 1e-3;
const MAX_RESTARTS: usize = 60;

#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    /// Lower-triangular factor.
    pub l: DMatrix<f64>,
    /// Relative diagonal shift that made the factorization succeed (0 if
    /// none was needed).
    pub shift: f64,
}

/// Factors `E + shift * diag(E) ~ L L^T`, dropping every off-diagonal entry
/// `|l_ij| < drop_tol * |E[:, j]|`. A nonpositive pivot restarts the
/// factorization with a larger shift.
pub fn incomplete_cholesky(e: &DMatrix<f64>, drop_tol: f64) -> Result<IncompleteCholesky> {
    if !(drop_tol.is_finite() && drop_tol >= 0.0) {
        return Err(invalid("drop tolerance must be nonnegative"));
    }
    let n = e.nrows();
    let col_norms: alloc::vec::Vec<f64> = e.column_iter().map(|c| c.norm()).collect();
    let mut shift = 0.0;
    for _ in 0..=MAX_RESTARTS {
        if let Some(l) = try_factor(e, drop_tol, shift, &col_norms) {
            return Ok(IncompleteCholesky { l, shift });
        }
        shift = if shift == 0.0 { INITIAL_SHIFT } else { 2.0 * shift };
    }
    Err(Error::NotPositiveDefinite(alloc::format!(
        "incomplete factorization of order {n} broke down for every shift"
    )))
}

fn try_factor(e: &DMatrix<f64>, drop_tol: f64, shift: f64, col_norms: &[f64]) -> Option<DMatrix<f64>> {
    let n = e.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = e[(j, j)] * (1.0 + shift);
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0 && d.is_finite()) {
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        let cut = drop_tol * col_norms[j];
        for i in j + 1..n {
            let mut v = e[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            v /= ljj;
            if v.abs() >= cut {
                l[(i, j)] = v;
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn zero_drop_is_exact() {
        let mut e = laplacian(8);
        e[(0, 7)] = 0.3;
        e[(7, 0)] = 0.3;
        let ic = incomplete_cholesky(&e, 0.0).unwrap();
        assert_eq!(ic.shift, 0.0);
        assert!((&ic.l * ic.l.transpose() - &e).amax() < 1e-12);
    }

    #[test]
    fn large_drop_keeps_diagonal_only() {
        let e = laplacian(5);
        let ic = incomplete_cholesky(&e, 10.0).unwrap();
        assert_eq!(ic.l, DMatrix::from_diagonal(&e.diagonal().map(|v| v.sqrt())));
    }

    #[test]
    fn breakdown_triggers_shift() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let ic = incomplete_cholesky(&indefinite, 0.0).unwrap();
        // the second pivot needs (1 + s)^2 > 4
        assert!(ic.shift > 1.0 && ic.shift < 2.1);
        assert!(incomplete_cholesky(&indefinite, -1.0).is_err());
    }
}
