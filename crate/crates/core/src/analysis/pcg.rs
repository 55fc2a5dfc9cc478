//! Preconditioned conjugate gradients with a true-residual stopping test.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::dense::sym_eigen;
use crate::error::{invalid, Error, Result};
use crate::preconditioner::Preconditioner;
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceHistory {
    pub preconditioner: String,
    pub iterations: usize,
    /// `sqrt(r_k^T M^-1 r_k)`, starting with the initial residual.
    pub preconditioned_residuals: Vec<f64>,
    /// `|F - A x| / |F|` at exit.
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Seconds; filled in by callers that own a clock.
    pub wall_time: Option<f64>,
    /// CG step lengths and direction updates since the last restart.
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub restarts: usize,
}

/// Solves `A x = F` from `x = 0`. Stops when the relative true residual is
/// at most `rel_tol`; a recursive residual that claims convergence while the
/// true one does not restarts the iteration from the true residual.
pub fn pcg_solve(
    a: &SparseSymMatrix,
    f: &DVector<f64>,
    m: &dyn Preconditioner,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, ConvergenceHistory)> {
    let n = a.order();
    if f.len() != n || m.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if f.len() != n { f.len() } else { m.order() },
        });
    }
    if !(rel_tol > 0.0) {
        return Err(invalid("relative tolerance must be positive"));
    }
    let name = m.name().to_string();
    let f_norm = f.norm();
    let mut x = DVector::zeros(n);
    let mut hist = ConvergenceHistory {
        preconditioner: name.clone(),
        iterations: 0,
        preconditioned_residuals: Vec::new(),
        final_relative_residual: 0.0,
        converged: true,
        wall_time: None,
        alphas: Vec::new(),
        betas: Vec::new(),
        restarts: 0,
    };
    if f_norm == 0.0 {
        hist.preconditioned_residuals.push(0.0);
        return Ok((x, hist));
    }
    let mut r = f.clone();
    let mut z = m.apply(&r);
    let mut rz = checked_rz(&r, &z, &name, 0)?;
    hist.preconditioned_residuals.push(rz.sqrt());
    let mut p = z.clone();
    let mut it = 0;
    loop {
        if r.norm() <= rel_tol * f_norm {
            let true_rel = (f - a.mul_vec(&x)).norm() / f_norm;
            if true_rel <= rel_tol {
                hist.final_relative_residual = true_rel;
                break;
            }
            // recursive residual drifted; restart
            r = f - a.mul_vec(&x);
            z = m.apply(&r);
            rz = checked_rz(&r, &z, &name, it)?;
            p = z.clone();
            hist.restarts += 1;
            hist.alphas.clear();
            hist.betas.clear();
        }
        if it == max_iter {
            hist.final_relative_residual = (f - a.mul_vec(&x)).norm() / f_norm;
            hist.converged = false;
            break;
        }
        it += 1;
        let ap = a.mul_vec(&p);
        let pap = p.dot(&ap);
        if !pap.is_finite() {
            return Err(Error::NonFinite(it));
        }
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite(alloc::format!(
                "p^T A p = {pap:e} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = m.apply(&r);
        let rz_new = checked_rz(&r, &z, &name, it)?;
        let beta = rz_new / rz;
        p = &z + &p * beta;
        rz = rz_new;
        hist.alphas.push(alpha);
        hist.betas.push(beta);
        hist.preconditioned_residuals.push(rz.sqrt());
    }
    hist.iterations = it;
    Ok((x, hist))
}

fn checked_rz(r: &DVector<f64>, z: &DVector<f64>, name: &str, iteration: usize) -> Result<f64> {
    let rz = r.dot(z);
    if !rz.is_finite() || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(iteration));
    }
    if rz < 0.0 {
        return Err(Error::IndefinitePreconditioner {
            name: name.into(),
            value: rz,
            iteration,
        });
    }
    Ok(rz)
}

/// Estimates of the extreme eigenvalues of `M^-1 A` from the Lanczos
/// tridiagonal matrix implied by the CG coefficients; `None` without steps.
pub fn lanczos_extremes(history: &ConvergenceHistory) -> Option<(f64, f64)> {
    let k = history.alphas.len();
    if k == 0 {
        return None;
    }
    let (al, be) = (&history.alphas, &history.betas);
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0 / al[i] + if i > 0 { be[i - 1] / al[i - 1] } else { 0.0 }
        } else if i.abs_diff(j) == 1 {
            let m = i.min(j);
            be[m].sqrt() / al[m]
        } else {
            0.0
        }
    });
    let ev = sym_eigen(&t).values;
    Some((ev[0], ev[k - 1]))
}

/// Classical CG iteration bound for condition number `kappa` with slack.
pub fn cg_iteration_bound(kappa: f64, rel_tol: f64) -> usize {
    (0.5 * kappa.sqrt() * (2.0 / rel_tol).ln()).ceil() as usize + 5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preconditioner::{DensePreconditioner, IdentityPreconditioner};
    use crate::sparse::Definiteness;

    fn laplacian(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymMatrix::from_triplets(n, &t, Definiteness::Spd).unwrap()
    }

    #[test]
    fn identity_system_in_one_step() {
        let a = SparseSymMatrix::from_dense(&DMatrix::identity(5, 5), Definiteness::Spd).unwrap();
        let f = DVector::from_fn(5, |i, _| i as f64 + 1.0);
        let (x, h) = pcg_solve(&a, &f, &IdentityPreconditioner(5), 1e-12, 10).unwrap();
        assert_eq!(h.iterations, 1);
        assert!((x - f).amax() < 1e-14);
    }

    #[test]
    fn exact_inverse_in_one_step() {
        let a = laplacian(20);
        let inv = a.to_dense().try_inverse().unwrap();
        let m = DensePreconditioner {
            matrix: inv,
            label: "inverse".into(),
        };
        let f = DVector::from_fn(20, |i, _| (i as f64).cos());
        let (_, h) = pcg_solve(&a, &f, &m, 1e-10, 10).unwrap();
        assert_eq!(h.iterations, 1);
        assert!(h.converged);
    }

    #[test]
    fn finite_termination_and_lanczos() {
        let n = 30;
        let a = laplacian(n);
        let f = DVector::from_element(n, 1.0);
        let (_, h) = pcg_solve(&a, &f, &IdentityPreconditioner(n), 1e-12, 4 * n).unwrap();
        assert!(h.converged && h.iterations <= n + 2, "{}", h.iterations);
        assert!(h.final_relative_residual <= 1e-12);
        let (lo, hi) = lanczos_extremes(&h).unwrap();
        let ev = sym_eigen(&a.to_dense()).values;
        // symmetric RHS only excites the symmetric modes
        assert!(lo >= ev[0] - 1e-10 && hi <= ev[n - 1] + 1e-10);
    }

    #[test]
    fn indefinite_preconditioner_is_named() {
        let a = laplacian(4);
        let m = DensePreconditioner {
            matrix: -DMatrix::identity(4, 4),
            label: "negated".into(),
        };
        match pcg_solve(&a, &DVector::from_element(4, 1.0), &m, 1e-8, 10) {
            Err(Error::IndefinitePreconditioner { name, .. }) => assert_eq!(name, "negated"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stall_is_flagged() {
        let a = laplacian(50);
        let (_, h) = pcg_solve(&a, &DVector::from_element(50, 1.0), &IdentityPreconditioner(50), 1e-12, 3).unwrap();
        assert!(!h.converged);
        assert_eq!(h.iterations, 3);
    }
}
