//! End-to-end setup: problem, coarse space, coarse operator, preconditioner
//! and the matching bound constants.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::analysis::{bounds_geneo, bounds_geneo2, bounds_geneo2_nonrobust, BoundConstants};
use crate::assembly::{assemble_global_stiffness, assemble_rhs, assemble_subdomain_neumann, Source};
use crate::coarse_operator::{assemble_E, CoarseStrategy, InexactCoarseOperator};
use crate::coarse_spaces::{
    assemble_coarse_basis, build_robin_matrix, solve_annex_gevp, solve_geneo2_lower_gevp,
    solve_geneo2_upper_gevp, solve_geneo_gevp, CoarseSpace, EigenPairSet, LocalProjectors,
};
use crate::coefficient::{CoefficientField, CoefficientPattern};
use crate::decomposition::{
    build_overlapping_decomposition, build_partition_of_unity, compute_k0, compute_k1,
    extend_decomposition, Decomposition, PartitionOfUnity,
};
use crate::error::{invalid, Result};
use crate::mesh::{build_structured_mesh, DirichletSides, Mesh};
use crate::preconditioner::{PreconditionerKind, SchwarzPreconditioner};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub dimension: usize,
    pub cells: usize,
    pub dirichlet: DirichletSides,
    pub coefficient: CoefficientPattern,
    pub grid: [usize; 2],
    pub overlap: usize,
}

/// Assembled system and decomposition data shared by all methods.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub mesh: Mesh,
    pub coefficient: CoefficientField,
    pub a: SparseSymMatrix,
    pub decomposition: Decomposition,
    pub pou: PartitionOfUnity,
    pub neumann: Vec<SparseSymMatrix>,
    pub k0: usize,
    pub k1: usize,
}

impl Problem {
    pub fn build(spec: ProblemSpec) -> Result<Self> {
        let mesh = build_structured_mesh(spec.dimension, spec.cells, spec.dirichlet)?;
        let coefficient = CoefficientField::generate(&mesh, spec.coefficient)?;
        let a = assemble_global_stiffness(&mesh, &coefficient)?;
        let decomposition = build_overlapping_decomposition(&mesh, spec.grid, spec.overlap)?;
        let pou = build_partition_of_unity(&decomposition)?;
        let neumann = (0..decomposition.len())
            .map(|i| {
                assemble_subdomain_neumann(
                    &mesh,
                    &coefficient,
                    decomposition.cells(i),
                    decomposition.dofs(i),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let k0 = compute_k0(&decomposition, &a);
        let k1 = compute_k1(&decomposition);
        Ok(Self {
            spec,
            mesh,
            coefficient,
            a,
            decomposition,
            pou,
            neumann,
            k0,
            k1,
        })
    }

    /// Load vector of a unit source.
    pub fn rhs(&self) -> Result<DVector<f64>> {
        assemble_rhs(&self.mesh, Source::Uniform(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalMatrixKind {
    /// `B_i` = Neumann matrix of the subdomain.
    Neumann,
    /// Neumann matrix plus `alpha` times the interface mass.
    Robin { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseMethod {
    Geneo { tau: f64 },
    Geneo2 { tau: f64, gamma: f64, local: LocalMatrixKind },
    /// GenEO eigenproblems on subdomains grown by `layers`.
    AnnexGeneo { tau: f64, layers: usize },
}

impl CoarseMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoarseMethod::Geneo { .. } => "geneo",
            CoarseMethod::Geneo2 { .. } => "geneo2",
            CoarseMethod::AnnexGeneo { .. } => "annex-geneo",
        }
    }

    pub fn tau(&self) -> f64 {
        match *self {
            CoarseMethod::Geneo { tau }
            | CoarseMethod::Geneo2 { tau, .. }
            | CoarseMethod::AnnexGeneo { tau, .. } => tau,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            CoarseMethod::Geneo2 { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau() > 0.0 && self.tau().is_finite()) {
            return Err(invalid("tau must be positive"));
        }
        if let CoarseMethod::Geneo2 { gamma, local, .. } = *self {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid("gamma must be positive"));
            }
            if let LocalMatrixKind::Robin { alpha } = local {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(invalid("Robin alpha must be positive"));
                }
            }
        }
        if let CoarseMethod::AnnexGeneo { layers, .. } = *self {
            if layers == 0 {
                return Err(invalid("annex extension needs at least one layer"));
            }
        }
        Ok(())
    }
}

/// Extended decomposition of the annex variant.
#[derive(Debug, Clone)]
pub struct AnnexData {
    pub decomposition: Decomposition,
    pub pou: PartitionOfUnity,
    pub neumann: Vec<SparseSymMatrix>,
    pub k1: usize,
}

#[derive(Debug, Clone)]
pub struct CoarseSetup {
    pub method: CoarseMethod,
    pub space: CoarseSpace,
    /// Orthonormal basis of the coarse space used by every operator.
    pub z: DMatrix<f64>,
    pub sets: Vec<EigenPairSet>,
    /// GenEO-2 only.
    pub b: Vec<SparseSymMatrix>,
    pub projectors: Vec<LocalProjectors>,
    pub annex: Option<AnnexData>,
    /// Multiplicity entering `c_T`.
    pub k1: usize,
}

impl CoarseSetup {
    /// Largest finite eigenvalue of the upper GenEO-2 problems.
    pub fn local_upper_max(&self) -> f64 {
        self.sets
            .iter()
            .filter(|s| s.kind == crate::coarse_spaces::GevpKind::Geneo2Upper)
            .filter_map(|s| s.max_finite())
            .fold(0.0, f64::max)
    }
}

pub fn build_coarse(problem: &Problem, method: CoarseMethod) -> Result<CoarseSetup> {
    method.validate()?;
    let d = &problem.decomposition;
    let mut sets = Vec::new();
    let mut b = Vec::new();
    let mut projectors = Vec::new();
    let mut annex = None;
    let mut k1 = problem.k1;
    let space = match method {
        CoarseMethod::Geneo { tau } => {
            for j in 0..d.len() {
                sets.push(solve_geneo_gevp(j, &problem.a, d, &problem.pou, &problem.neumann[j], tau)?);
            }
            assemble_coarse_basis(&sets, d, &problem.pou)?
        }
        CoarseMethod::Geneo2 { tau, gamma, local } => {
            for i in 0..d.len() {
                let bi = match local {
                    LocalMatrixKind::Neumann => problem.neumann[i].clone(),
                    LocalMatrixKind::Robin { alpha } => {
                        build_robin_matrix(&problem.mesh, &problem.coefficient, d, i, alpha)?
                    }
                };
                let lower = match local {
                    LocalMatrixKind::Neumann => None,
                    LocalMatrixKind::Robin { .. } => {
                        Some(solve_geneo2_lower_gevp(i, &problem.neumann[i], &bi, tau)?)
                    }
                };
                let upper = solve_geneo2_upper_gevp(i, &problem.a, d, &problem.pou, &bi, gamma)?;
                projectors.push(LocalProjectors::geneo2(lower.as_ref(), &upper, &bi)?);
                sets.extend(lower);
                sets.push(upper);
                b.push(bi);
            }
            assemble_coarse_basis(&sets, d, &problem.pou)?
        }
        CoarseMethod::AnnexGeneo { tau, layers } => {
            let (ext, ext_pou) = extend_decomposition(&problem.mesh, d, &problem.pou, layers)?;
            let neumann = (0..ext.len())
                .map(|i| {
                    assemble_subdomain_neumann(&problem.mesh, &problem.coefficient, ext.cells(i), ext.dofs(i))
                })
                .collect::<Result<Vec<_>>>()?;
            for i in 0..ext.len() {
                sets.push(solve_annex_gevp(i, &problem.a, &ext, &ext_pou, &neumann[i], tau)?);
            }
            let space = assemble_coarse_basis(&sets, &ext, &ext_pou)?;
            k1 = compute_k1(&ext);
            annex = Some(AnnexData {
                decomposition: ext,
                pou: ext_pou,
                neumann,
                k1,
            });
            space
        }
    };
    let z = space.orthonormal_z();
    Ok(CoarseSetup {
        method,
        space,
        z,
        sets,
        b,
        projectors,
        annex,
        k1,
    })
}

pub fn build_coarse_operator(
    problem: &Problem,
    setup: &CoarseSetup,
    strategy: CoarseStrategy,
    seed: u64,
) -> Result<InexactCoarseOperator> {
    let e = assemble_E(&setup.z, &problem.a)?;
    InexactCoarseOperator::build(&e, strategy, seed)
}

/// The preconditioner of `kind` on this coarse space.
pub fn build_preconditioner(
    problem: &Problem,
    setup: &CoarseSetup,
    op: &InexactCoarseOperator,
    kind: PreconditionerKind,
) -> Result<SchwarzPreconditioner> {
    let (a, d) = (&problem.a, &problem.decomposition);
    let p = match kind {
        PreconditionerKind::OneLevelAs => SchwarzPreconditioner::one_level(a, d)?,
        PreconditionerKind::GeneoAcs => SchwarzPreconditioner::geneo_acs(a, d, &setup.z, op)?,
        PreconditionerKind::Geneo2Acs => {
            if setup.projectors.is_empty() {
                return Err(invalid("geneo2-acs needs a GenEO-2 coarse space"));
            }
            SchwarzPreconditioner::geneo2_acs(a, d, &problem.pou, &setup.projectors, &setup.z, op)?
        }
        PreconditionerKind::Geneo2NonRobust => {
            if setup.b.is_empty() {
                return Err(invalid("geneo2-nonrobust needs a GenEO-2 coarse space"));
            }
            SchwarzPreconditioner::geneo2_nonrobust(a, d, &problem.pou, &setup.b, &setup.z, op)?
        }
    };
    Ok(p.with_thresholds(Some(setup.method.tau()), setup.method.gamma()))
}

/// Default preconditioner kind of a coarse method.
pub fn default_kind(method: CoarseMethod) -> PreconditionerKind {
    match method {
        CoarseMethod::Geneo2 { .. } => PreconditionerKind::Geneo2Acs,
        _ => PreconditionerKind::GeneoAcs,
    }
}

/// Bound constants matching a coarse setup, coarse operator and
/// preconditioner kind.
pub fn bound_constants(
    problem: &Problem,
    setup: &CoarseSetup,
    op: &InexactCoarseOperator,
    kind: PreconditionerKind,
) -> Result<BoundConstants> {
    let (lmin, lmax) = (op.lambda_min(), op.lambda_max());
    let tau = setup.method.tau();
    match (setup.method, kind) {
        (CoarseMethod::Geneo { .. }, PreconditionerKind::GeneoAcs) => {
            bounds_geneo(problem.k0, problem.k1, tau, lmin, lmax)
        }
        (CoarseMethod::AnnexGeneo { .. }, PreconditionerKind::GeneoAcs) => {
            let mut b = bounds_geneo(problem.k0, setup.k1, tau, lmin, lmax)?;
            b.method = crate::analysis::BoundMethod::AnnexGeneo;
            Ok(b)
        }
        (CoarseMethod::Geneo2 { gamma, .. }, PreconditionerKind::Geneo2Acs) => {
            bounds_geneo2(problem.k0, problem.k1, tau, gamma, lmin, lmax)
        }
        (CoarseMethod::Geneo2 { gamma, .. }, PreconditionerKind::Geneo2NonRobust) => bounds_geneo2_nonrobust(
            problem.k0,
            problem.k1,
            tau,
            gamma,
            lmin,
            lmax,
            setup.local_upper_max(),
        ),
        (m, k) => Err(invalid(alloc::format!(
            "no bound for preconditioner {} on a {} coarse space",
            k.as_str(),
            m.as_str()
        ))),
    }
}

/// Preconditioner kind matching a bound method.
pub fn bound_method_of(method: CoarseMethod, kind: PreconditionerKind) -> crate::analysis::BoundMethod {
    use crate::analysis::BoundMethod;
    match (method, kind) {
        (CoarseMethod::AnnexGeneo { .. }, _) => BoundMethod::AnnexGeneo,
        (_, PreconditionerKind::Geneo2Acs) => BoundMethod::Geneo2,
        (_, PreconditionerKind::Geneo2NonRobust) => BoundMethod::Geneo2NonRobust,
        _ => BoundMethod::Geneo,
    }
}
