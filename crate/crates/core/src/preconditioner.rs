//! One-level additive Schwarz and the hybrid two-level preconditioners with
//! an inexact coarse solve.
//!
//! The two-level kinds apply
//! `Z E~^-1 Z^T r + (I - P0~) S (I - P0~^T) r` with `S` the one-level sum.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::coarse_operator::InexactCoarseOperator;
use crate::coarse_spaces::LocalProjectors;
use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::dense::{cholesky, DenseCholesky};
use crate::error::{invalid, Error, Result};
use crate::sparse::SparseSymMatrix;

/// A symmetric positive definite approximation of `A^-1`.
pub trait Preconditioner {
    fn apply(&self, r: &DVector<f64>) -> DVector<f64>;
    fn name(&self) -> &str;
    fn order(&self) -> usize;
}

/// `M = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        r.clone()
    }
    fn name(&self) -> &str {
        "identity"
    }
    fn order(&self) -> usize {
        self.0
    }
}

/// Applies a given dense matrix.
#[derive(Debug, Clone)]
pub struct DensePreconditioner {
    pub matrix: DMatrix<f64>,
    pub label: String,
}

impl Preconditioner for DensePreconditioner {
    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.matrix * r
    }
    fn name(&self) -> &str {
        &self.label
    }
    fn order(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    OneLevelAs,
    GeneoAcs,
    Geneo2Acs,
    Geneo2NonRobust,
}

impl PreconditionerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PreconditionerKind::OneLevelAs => "one-level-as",
            PreconditionerKind::GeneoAcs => "geneo-acs",
            PreconditionerKind::Geneo2Acs => "geneo2-acs",
            PreconditionerKind::Geneo2NonRobust => "geneo2-nonrobust",
        }
    }
}

#[derive(Debug, Clone)]
enum LocalSolver {
    /// `(R A R^T)^-1`.
    Dirichlet(DenseCholesky),
    /// `D q B^dagger q D`.
    Projected {
        weights: DVector<f64>,
        projectors: LocalProjectors,
    },
    /// `D B^-1 D`.
    Weighted {
        weights: DVector<f64>,
        b: DenseCholesky,
    },
}

#[derive(Debug, Clone)]
struct Coarse {
    z: DMatrix<f64>,
    op: InexactCoarseOperator,
}

#[derive(Debug, Clone)]
pub struct SchwarzPreconditioner {
    kind: PreconditionerKind,
    a: SparseSymMatrix,
    decomposition: Decomposition,
    local: Vec<LocalSolver>,
    coarse: Option<Coarse>,
    tau: Option<f64>,
    gamma: Option<f64>,
    empty_w: Vec<usize>,
}

fn dirichlet_solvers(a: &SparseSymMatrix, d: &Decomposition) -> Result<Vec<LocalSolver>> {
    (0..d.len())
        .map(|i| {
            let block = a.principal_submatrix(d.dofs(i)).to_dense();
            cholesky(&block).map(LocalSolver::Dirichlet).ok_or_else(|| {
                Error::NotPositiveDefinite(alloc::format!("local Dirichlet block of subdomain {i}"))
            })
        })
        .collect()
}

fn check_coarse(a: &SparseSymMatrix, z: &DMatrix<f64>, op: &InexactCoarseOperator) -> Result<()> {
    if z.nrows() != a.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: z.nrows(),
        });
    }
    if op.order() != z.ncols() {
        return Err(Error::DimensionMismatch {
            expected: z.ncols(),
            got: op.order(),
        });
    }
    Ok(())
}

impl SchwarzPreconditioner {
    /// `sum_i R_i^T (R_i A R_i^T)^-1 R_i`.
    pub fn one_level(a: &SparseSymMatrix, decomposition: &Decomposition) -> Result<Self> {
        if decomposition.n_dofs() != a.order() {
            return Err(Error::DimensionMismatch {
                expected: a.order(),
                got: decomposition.n_dofs(),
            });
        }
        Ok(Self {
            kind: PreconditionerKind::OneLevelAs,
            a: a.clone(),
            decomposition: decomposition.clone(),
            local: dirichlet_solvers(a, decomposition)?,
            coarse: None,
            tau: None,
            gamma: None,
            empty_w: Vec::new(),
        })
    }

    /// Hybrid two-level method with the additive Schwarz sum.
    pub fn geneo_acs(
        a: &SparseSymMatrix,
        decomposition: &Decomposition,
        z: &DMatrix<f64>,
        op: &InexactCoarseOperator,
    ) -> Result<Self> {
        check_coarse(a, z, op)?;
        let mut p = Self::one_level(a, decomposition)?;
        p.kind = PreconditionerKind::GeneoAcs;
        p.coarse = Some(Coarse {
            z: z.clone(),
            op: op.clone(),
        });
        Ok(p)
    }

    /// Hybrid two-level method with `sum_i R_i^T D_i q_i B_i^dagger q_i D_i R_i`.
    pub fn geneo2_acs(
        a: &SparseSymMatrix,
        decomposition: &Decomposition,
        pou: &PartitionOfUnity,
        projectors: &[LocalProjectors],
        z: &DMatrix<f64>,
        op: &InexactCoarseOperator,
    ) -> Result<Self> {
        check_coarse(a, z, op)?;
        if projectors.len() != decomposition.len() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.len(),
                got: projectors.len(),
            });
        }
        let mut empty_w = Vec::new();
        let mut local = Vec::with_capacity(projectors.len());
        for (i, lp) in projectors.iter().enumerate() {
            if lp.order() != decomposition.dofs(i).len() || lp.b_kind().is_none() {
                return Err(invalid(alloc::format!(
                    "projectors of subdomain {i} do not match the decomposition"
                )));
            }
            if lp.w_dim() == 0 {
                empty_w.push(i);
            }
            local.push(LocalSolver::Projected {
                weights: pou.weights(i).clone(),
                projectors: lp.clone(),
            });
        }
        Ok(Self {
            kind: PreconditionerKind::Geneo2Acs,
            a: a.clone(),
            decomposition: decomposition.clone(),
            local,
            coarse: Some(Coarse {
                z: z.clone(),
                op: op.clone(),
            }),
            tau: None,
            gamma: None,
            empty_w,
        })
    }

    /// Hybrid two-level method with `sum_i R_i^T D_i B_i^-1 D_i R_i`; every
    /// `B_i` must be SPD.
    pub fn geneo2_nonrobust(
        a: &SparseSymMatrix,
        decomposition: &Decomposition,
        pou: &PartitionOfUnity,
        b: &[SparseSymMatrix],
        z: &DMatrix<f64>,
        op: &InexactCoarseOperator,
    ) -> Result<Self> {
        check_coarse(a, z, op)?;
        if b.len() != decomposition.len() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.len(),
                got: b.len(),
            });
        }
        let local = b
            .iter()
            .enumerate()
            .map(|(i, bi)| {
                let f = cholesky(&bi.to_dense()).ok_or_else(|| {
                    Error::NotPositiveDefinite(alloc::format!("B of subdomain {i}"))
                })?;
                Ok(LocalSolver::Weighted {
                    weights: pou.weights(i).clone(),
                    b: f,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: PreconditionerKind::Geneo2NonRobust,
            a: a.clone(),
            decomposition: decomposition.clone(),
            local,
            coarse: Some(Coarse {
                z: z.clone(),
                op: op.clone(),
            }),
            tau: None,
            gamma: None,
            empty_w: Vec::new(),
        })
    }

    /// Records the thresholds the coarse space was built with.
    pub fn with_thresholds(mut self, tau: Option<f64>, gamma: Option<f64>) -> Self {
        self.tau = tau;
        self.gamma = gamma;
        self
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn coarse_dim(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.z.ncols())
    }

    pub fn coarse_operator(&self) -> Option<&InexactCoarseOperator> {
        self.coarse.as_ref().map(|c| &c.op)
    }

    /// Subdomains whose `W_i,gamma` is trivial; their local term is zero.
    pub fn empty_complements(&self) -> &[usize] {
        &self.empty_w
    }

    /// The one-level part `S r`.
    pub fn apply_local_sum(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(r.len());
        for (i, solver) in self.local.iter().enumerate() {
            let ri = self.decomposition.restrict(i, r);
            let zi = match solver {
                LocalSolver::Dirichlet(c) => c.solve(&ri),
                LocalSolver::Projected {
                    weights,
                    projectors,
                } => {
                    let y = ri.component_mul(weights);
                    let y = projectors
                        .apply(crate::coarse_spaces::ProjectionKind::Q, &y)
                        .expect("projector shapes checked at construction");
                    let x = projectors.pseudo_inverse_unchecked(&y);
                    let x = projectors
                        .apply(crate::coarse_spaces::ProjectionKind::Q, &x)
                        .expect("projector shapes checked at construction");
                    x.component_mul(weights)
                }
                LocalSolver::Weighted { weights, b } => {
                    b.solve(&ri.component_mul(weights)).component_mul(weights)
                }
            };
            self.decomposition.prolong_add(i, &zi, &mut out);
        }
        out
    }

    /// `Z E~^-1 Z^T r`.
    pub fn apply_coarse(&self, r: &DVector<f64>) -> DVector<f64> {
        match &self.coarse {
            Some(c) if c.z.ncols() > 0 => &c.z * c.op.solve_e_tilde(&(c.z.transpose() * r)),
            _ => DVector::zeros(r.len()),
        }
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        if self.coarse_dim() == 0 {
            return self.apply_local_sum(r);
        }
        let c = self.apply_coarse(r);
        let s = r - self.a.mul_vec(&c);
        let w = self.apply_local_sum(&s);
        let correction = self.apply_coarse(&self.a.mul_vec(&w));
        c + w - correction
    }

    fn name(&self) -> &str {
        self.kind.as_str()
    }

    fn order(&self) -> usize {
        self.a.order()
    }
}

/// The matrix of `p`, column by column.
pub fn densify(p: &dyn Preconditioner) -> DMatrix<f64> {
    let n = p.order();
    let mut m = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for j in 0..n {
        e[j] = 1.0;
        m.set_column(j, &p.apply(&e));
        e[j] = 0.0;
    }
    m
}
