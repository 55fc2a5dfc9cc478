//! Local projections built from the eigenpairs and the pseudo-inverse of
//! `B_i` on `W_i,gamma`.
//!
//! `W_i,gamma` is described by constraint vectors `Y` with
//! `W = { x : Y^T x = 0 }`. For SPD `B`, `Y = B Z_gamma`; for the Neumann
//! choice `B = A_neu` the constraints are the dual vectors of `V_i,gamma` in
//! the full eigenbasis, so that `W` is the span of the finite eigenvectors
//! with `mu <= gamma`.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use super::basis::BASIS_RTOL;
use super::gevp::EigenPairSet;
use crate::dense::{cholesky, independent_columns, is_positive_definite, DenseCholesky};
use crate::error::{invalid, Error, Result};
use crate::sparse::SparseSymMatrix;

/// Tolerance for accepting an input of `B^dagger` as an element of `W`.
pub const COMPLEMENT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionKind {
    /// Onto the selected eigenvectors, parallel to the others.
    PiTilde,
    /// Onto `V_i,gamma`, parallel to `W_i,gamma`.
    Xi,
    /// `B`-orthogonal onto `V_j,tau + V_j,gamma`.
    P,
    /// Euclidean-orthogonal onto `W_i,gamma`.
    Q,
}

impl ProjectionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProjectionKind::PiTilde => "pi_tilde",
            ProjectionKind::Xi => "xi",
            ProjectionKind::P => "p",
            ProjectionKind::Q => "q",
        }
    }
}

/// Which branch of the local matrix assumption holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalBKind {
    Spd,
    Neumann,
}

/// `B`-orthogonal projection onto the span of `basis` (`B` SPD on it).
#[derive(Debug, Clone)]
pub struct BOrthogonalProjector {
    basis: DMatrix<f64>,
    b_basis: DMatrix<f64>,
    gram: Option<DenseCholesky>,
}

impl BOrthogonalProjector {
    /// Dependent columns of `basis` are dropped first.
    pub fn new(basis: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let basis = basis.select_columns(&independent_columns(basis, BASIS_RTOL));
        let b_basis = b * &basis;
        let gram = if basis.ncols() == 0 {
            None
        } else {
            Some(cholesky(&(basis.transpose() * &b_basis)).ok_or_else(|| {
                Error::NotPositiveDefinite("B restricted to the projection range".into())
            })?)
        };
        Ok(Self {
            basis,
            b_basis,
            gram,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.gram {
            None => DVector::zeros(x.len()),
            Some(g) => &self.basis * g.solve(&(self.b_basis.transpose() * x)),
        }
    }
}

/// Projector data of one subdomain.
#[derive(Debug, Clone)]
pub struct LocalProjectors {
    subdomain: usize,
    order: usize,
    pi_tilde: DMatrix<f64>,
    geneo2: Option<Geneo2Data>,
}

#[derive(Debug, Clone)]
struct Geneo2Data {
    kind: LocalBKind,
    b: DMatrix<f64>,
    z_gamma: DMatrix<f64>,
    y: DMatrix<f64>,
    xi_gram: Option<LU<f64, Dyn, Dyn>>,
    q_gram: Option<DenseCholesky>,
    p: Option<BOrthogonalProjector>,
    w_basis: DMatrix<f64>,
    w_gram: Option<Cholesky<f64, Dyn>>,
}

/// Oblique projection onto the selected columns of the full eigenbasis.
fn oblique_selection_matrix(set: &EigenPairSet) -> Result<DMatrix<f64>> {
    let n = set.order();
    let m = set.vectors.ncols();
    let full = DMatrix::from_fn(n, n, |i, j| {
        if j < m {
            set.vectors[(i, j)]
        } else {
            set.degenerate[(i, j - m)]
        }
    });
    let inv = full
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| invalid("eigenbasis is singular"))?;
    let sel = set.selected_indices();
    Ok(full.select_columns(&sel) * inv.select_rows(&sel))
}

impl LocalProjectors {
    /// Only `pi_tilde` is available.
    pub fn geneo(set: &EigenPairSet) -> Result<Self> {
        Ok(Self {
            subdomain: set.subdomain,
            order: set.order(),
            pi_tilde: oblique_selection_matrix(set)?,
            geneo2: None,
        })
    }

    /// Projectors for the two-threshold construction. `lower` is `None` in
    /// the Neumann branch, where the lower problem contributes nothing.
    pub fn geneo2(
        lower: Option<&EigenPairSet>,
        upper: &EigenPairSet,
        b: &SparseSymMatrix,
    ) -> Result<Self> {
        let n = upper.order();
        if b.order() != n || lower.is_some_and(|l| l.order() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.order(),
            });
        }
        let bd = b.to_dense();
        let kind = if is_positive_definite(&bd) {
            LocalBKind::Spd
        } else {
            LocalBKind::Neumann
        };
        let sel = upper.selected_indices();
        let z_gamma = upper.vectors.select_columns(&sel);
        let y = match kind {
            LocalBKind::Spd => &bd * &z_gamma,
            LocalBKind::Neumann => {
                let m = upper.vectors.ncols();
                let full = DMatrix::from_fn(n, n, |i, j| {
                    if j < m {
                        upper.vectors[(i, j)]
                    } else {
                        upper.degenerate[(i, j - m)]
                    }
                });
                let dual = full
                    .transpose()
                    .lu()
                    .try_inverse()
                    .ok_or_else(|| invalid("eigenbasis is singular"))?;
                dual.select_columns(&sel)
            }
        };
        let (xi_gram, q_gram) = if sel.is_empty() {
            (None, None)
        } else {
            let q = cholesky(&(y.transpose() * &y))
                .ok_or_else(|| Error::RankDefect("constraints of W_i,gamma".into()))?;
            (Some((y.transpose() * &z_gamma).lu()), Some(q))
        };
        let p = match (kind, lower) {
            (LocalBKind::Spd, Some(lo)) => {
                let vt = lo.selected_vectors();
                let both = DMatrix::from_fn(n, vt.ncols() + z_gamma.ncols(), |i, j| {
                    if j < vt.ncols() {
                        vt[(i, j)]
                    } else {
                        z_gamma[(i, j - vt.ncols())]
                    }
                });
                Some(BOrthogonalProjector::new(&both, &bd)?)
            }
            _ => None,
        };
        let w_basis = upper.unselected_finite_vectors();
        // Unselected eigenvectors span W_i,gamma in both branches; solving on
        // that basis avoids the conditioning of B itself.
        let w_gram = if w_basis.ncols() > 0 {
            Some(
                cholesky(&(w_basis.transpose() * &bd * &w_basis))
                    .ok_or_else(|| Error::NotPositiveDefinite("B on W_i,gamma".into()))?,
            )
        } else {
            None
        };
        let pi_tilde = match lower {
            Some(lo) => oblique_selection_matrix(lo)?,
            None => DMatrix::zeros(n, n),
        };
        Ok(Self {
            subdomain: upper.subdomain,
            order: n,
            pi_tilde,
            geneo2: Some(Geneo2Data {
                kind,
                b: bd,
                z_gamma,
                y,
                xi_gram,
                q_gram,
                p,
                w_basis,
                w_gram,
            }),
        })
    }

    pub fn subdomain(&self) -> usize {
        self.subdomain
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn b_kind(&self) -> Option<LocalBKind> {
        self.geneo2.as_ref().map(|g| g.kind)
    }

    /// `dim V_i,gamma`.
    pub fn v_gamma_dim(&self) -> usize {
        self.geneo2.as_ref().map_or(0, |g| g.z_gamma.ncols())
    }

    /// `dim W_i,gamma`.
    pub fn w_dim(&self) -> usize {
        self.geneo2.as_ref().map_or(0, |g| g.w_basis.ncols())
    }

    fn data(&self, what: &'static str) -> Result<&Geneo2Data> {
        self.geneo2.as_ref().ok_or(Error::ProjectorUnavailable(what))
    }

    fn check_len(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.order {
            return Err(Error::DimensionMismatch {
                expected: self.order,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, kind: ProjectionKind, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x)?;
        match kind {
            ProjectionKind::PiTilde => Ok(&self.pi_tilde * x),
            ProjectionKind::Xi => {
                let g = self.data("xi")?;
                Ok(match &g.xi_gram {
                    None => DVector::zeros(self.order),
                    Some(lu) => {
                        let c = lu
                            .solve(&(g.y.transpose() * x))
                            .ok_or_else(|| invalid("singular projection system"))?;
                        &g.z_gamma * c
                    }
                })
            }
            ProjectionKind::Q => Ok(self.q(self.data("q")?, x)),
            ProjectionKind::P => {
                let p = self.data("p")?.p.as_ref().ok_or(Error::ProjectorUnavailable("p"))?;
                Ok(p.apply(x))
            }
        }
    }

    fn q(&self, g: &Geneo2Data, x: &DVector<f64>) -> DVector<f64> {
        match &g.q_gram {
            None => x.clone(),
            Some(c) => x - &g.y * c.solve(&(g.y.transpose() * x)),
        }
    }

    /// Relative size of the constraint residual `Y^T y`; zero for `y` in
    /// `W_i,gamma`.
    pub fn complement_defect(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_len(y)?;
        let g = self.data("B_dagger")?;
        let yn = y.norm();
        if yn == 0.0 {
            return Ok(0.0);
        }
        Ok(g.y
            .column_iter()
            .map(|c| c.dot(y).abs() / (c.norm() * yn))
            .fold(0.0, f64::max))
    }

    /// `B^dagger y` for `y` in `W_i,gamma`; inputs with a relative constraint
    /// defect above `COMPLEMENT_RTOL` are rejected.
    pub fn apply_pseudo_inverse_b(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let defect = self.complement_defect(y)?;
        if defect > COMPLEMENT_RTOL {
            return Err(Error::OutsideComplement { defect });
        }
        Ok(self.pseudo_inverse_unchecked(y))
    }

    /// `B^dagger` without the membership check (inputs are projected by `q`
    /// inside the preconditioner).
    pub fn pseudo_inverse_unchecked(&self, y: &DVector<f64>) -> DVector<f64> {
        let Some(g) = &self.geneo2 else {
            return DVector::zeros(y.len());
        };
        match &g.w_gram {
            None => DVector::zeros(y.len()),
            Some(c) => &g.w_basis * c.solve(&(g.w_basis.transpose() * y)),
        }
    }

    /// `B_W y = q(B y)`, the operator `B^dagger` inverts on `W_i,gamma`.
    pub fn apply_b_w(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(y)?;
        let g = self.data("B_W")?;
        Ok(self.q(g, &(&g.b * y)))
    }

    /// Euclidean-orthonormal basis of `W_i,gamma`.
    pub fn w_orthonormal_basis(&self) -> Result<DMatrix<f64>> {
        let g = self.data("q")?;
        let n = self.order;
        let qm = DMatrix::from_columns(
            &(0..n)
                .map(|k| self.q(g, &DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })))
                .collect::<Vec<_>>(),
        );
        let e = crate::dense::sym_eigen(&qm);
        let idx: Vec<usize> = (0..n).filter(|&k| e.values[k] > 0.5).collect();
        Ok(e.vectors.select_columns(&idx))
    }
}

/// Projector data of all subdomains.
#[derive(Debug, Clone)]
pub struct SubdomainProjectors {
    locals: Vec<LocalProjectors>,
}

impl SubdomainProjectors {
    pub fn new(locals: Vec<LocalProjectors>) -> Self {
        Self { locals }
    }

    pub fn len(&self) -> usize {
        self.locals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locals.is_empty()
    }

    pub fn local(&self, i: usize) -> Result<&LocalProjectors> {
        self.locals.get(i).ok_or(Error::UnknownSubdomain {
            index: i,
            count: self.locals.len(),
        })
    }

    pub fn locals(&self) -> &[LocalProjectors] {
        &self.locals
    }
}

pub fn apply_projection(
    projectors: &SubdomainProjectors,
    kind: ProjectionKind,
    subdomain: usize,
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    projectors.local(subdomain)?.apply(kind, x)
}

#[allow(non_snake_case)]
pub fn apply_pseudo_inverse_B(
    projectors: &SubdomainProjectors,
    subdomain: usize,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    projectors.local(subdomain)?.apply_pseudo_inverse_b(y)
}
