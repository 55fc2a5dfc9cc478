//! Local generalized eigenproblems and their threshold selections.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::decomposition::{Decomposition, PartitionOfUnity};
use crate::dense::{is_positive_definite, pencil_residual, symmetric_pencil, PencilClass};
use crate::error::{invalid, Error, Result};
use crate::sparse::SparseSymMatrix;

/// Eigenvalues within this relative distance of the threshold are flagged
/// as ties (still resolved by the strict rule).
pub const TIE_RTOL: f64 = 1e-12;

/// Which local eigenproblem produced a set of pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GevpKind {
    /// `D R A R^T D v = lambda A_neu v`, keep `lambda > tau`.
    Geneo,
    /// `A_neu v = lambda B v`, keep `lambda < tau`.
    Geneo2Lower,
    /// `D R A R^T D u = mu B u`, keep `mu > gamma`.
    Geneo2Upper,
    /// GenEO problem posed on an extended subdomain.
    Annex,
}

impl GevpKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GevpKind::Geneo => "geneo",
            GevpKind::Geneo2Lower => "geneo2-lower",
            GevpKind::Geneo2Upper => "geneo2-upper",
            GevpKind::Annex => "annex",
        }
    }
}

/// Strict selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Above(f64),
    Below(f64),
}

impl Selection {
    pub fn threshold(&self) -> f64 {
        match *self {
            Selection::Above(t) | Selection::Below(t) => t,
        }
    }

    pub fn keeps(&self, lambda: f64) -> bool {
        match *self {
            Selection::Above(t) => lambda > t,
            Selection::Below(t) => lambda < t,
        }
    }
}

/// Eigenpairs of one local pencil `L v = lambda R v`.
///
/// `values` are sorted descending with `+inf` first; `vectors` has unit
/// Euclidean-norm columns in the same order. `degenerate` spans the common
/// kernel of both pencil matrices; those directions carry no eigenvalue and
/// never enter the coarse space.
#[derive(Debug, Clone)]
pub struct EigenPairSet {
    pub subdomain: usize,
    pub kind: GevpKind,
    pub rule: Selection,
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub selected: Vec<bool>,
    /// Indices whose eigenvalue lies within `TIE_RTOL` of the threshold.
    pub ties: Vec<usize>,
    pub degenerate: DMatrix<f64>,
}

impl EigenPairSet {
    pub fn order(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn n_selected(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&k| self.selected[k]).collect()
    }

    pub fn unselected_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&k| !self.selected[k]).collect()
    }

    /// Selected eigenvectors as columns.
    pub fn selected_vectors(&self) -> DMatrix<f64> {
        self.vectors.select_columns(&self.selected_indices())
    }

    /// Finite eigenvectors that were not selected.
    pub fn unselected_finite_vectors(&self) -> DMatrix<f64> {
        let idx: Vec<usize> = self
            .unselected_indices()
            .into_iter()
            .filter(|&k| self.values[k].is_finite())
            .collect();
        self.vectors.select_columns(&idx)
    }

    /// Largest finite eigenvalue, if any.
    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().find(|v| v.is_finite())
    }

    /// Largest pencil residual over all pairs.
    pub fn max_residual(&self, l: &DMatrix<f64>, r: &DMatrix<f64>) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let v: DVector<f64> = self.vectors.column(k).into_owned();
                pencil_residual(l, r, self.values[k], &v)
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `L v = lambda R v` with `R` semi-definite and applies `rule`.
pub fn solve_threshold_pencil(
    subdomain: usize,
    kind: GevpKind,
    l: &DMatrix<f64>,
    r: &DMatrix<f64>,
    rule: Selection,
) -> Result<EigenPairSet> {
    let t = rule.threshold();
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("eigenvalue threshold must be positive and finite"));
    }
    let pe = symmetric_pencil(l, r)?;
    let selected: Vec<bool> = pe
        .values
        .iter()
        .zip(&pe.classes)
        .map(|(&v, c)| match c {
            PencilClass::Infinite => matches!(rule, Selection::Above(_)),
            PencilClass::Finite => rule.keeps(v),
        })
        .collect();
    let ties = pe
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.is_finite() && (v - t).abs() <= TIE_RTOL * t)
        .map(|(k, _)| k)
        .collect();
    Ok(EigenPairSet {
        subdomain,
        kind,
        rule,
        values: pe.values,
        vectors: pe.vectors,
        selected,
        ties,
        degenerate: pe.degenerate,
    })
}

/// Dense `D_j R_j A R_j^T D_j`.
pub fn weighted_local_matrix(
    a: &SparseSymMatrix,
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
    j: usize,
) -> Result<DMatrix<f64>> {
    decomposition.subdomain(j)?;
    let d = pou.weights(j);
    let mut m = a.principal_submatrix(decomposition.dofs(j)).to_dense();
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= d[i];
    }
    for (k, mut col) in m.column_iter_mut().enumerate() {
        col *= d[k];
    }
    Ok(m)
}

fn check_local(decomposition: &Decomposition, j: usize, m: &SparseSymMatrix) -> Result<()> {
    let n = decomposition.subdomain(j)?.dofs.len();
    if m.order() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.order(),
        });
    }
    Ok(())
}

/// GenEO problem on subdomain `j`; keeps `lambda > tau` and every kernel
/// direction of the Neumann matrix.
pub fn solve_geneo_gevp(
    j: usize,
    a: &SparseSymMatrix,
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
    neumann: &SparseSymMatrix,
    tau: f64,
) -> Result<EigenPairSet> {
    check_local(decomposition, j, neumann)?;
    let l = weighted_local_matrix(a, decomposition, pou, j)?;
    solve_threshold_pencil(j, GevpKind::Geneo, &l, &neumann.to_dense(), Selection::Above(tau))
}

/// Lower-bound problem `A_neu v = lambda B v` with `B` SPD; keeps
/// `lambda < tau`.
pub fn solve_geneo2_lower_gevp(
    j: usize,
    neumann: &SparseSymMatrix,
    b: &SparseSymMatrix,
    tau: f64,
) -> Result<EigenPairSet> {
    if neumann.order() != b.order() {
        return Err(Error::DimensionMismatch {
            expected: neumann.order(),
            got: b.order(),
        });
    }
    let bd = b.to_dense();
    if !is_positive_definite(&bd) {
        return Err(Error::NotPositiveDefinite(alloc::format!(
            "B of subdomain {j} (lower eigenproblem needs an SPD B)"
        )));
    }
    solve_threshold_pencil(
        j,
        GevpKind::Geneo2Lower,
        &neumann.to_dense(),
        &bd,
        Selection::Below(tau),
    )
}

/// Upper-bound problem `D R A R^T D u = mu B u`; keeps `mu > gamma`.
///
/// `B` must be SPD, or semi-definite with `D R A R^T D` definite (the
/// Neumann choice `B = A_neu`), in which case the kernel of `B` is selected
/// with `mu = +inf`.
pub fn solve_geneo2_upper_gevp(
    i: usize,
    a: &SparseSymMatrix,
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
    b: &SparseSymMatrix,
    gamma: f64,
) -> Result<EigenPairSet> {
    check_local(decomposition, i, b)?;
    let l = weighted_local_matrix(a, decomposition, pou, i)?;
    let bd = b.to_dense();
    if !is_positive_definite(&bd) && !is_positive_definite(&l) {
        return Err(Error::NotPositiveDefinite(alloc::format!(
            "neither B nor D R A R^T D of subdomain {i} is definite"
        )));
    }
    solve_threshold_pencil(i, GevpKind::Geneo2Upper, &l, &bd, Selection::Above(gamma))
}

/// GenEO problem on an extended subdomain, with the inherited partition of
/// unity (zero on the added layers).
pub fn solve_annex_gevp(
    i: usize,
    a: &SparseSymMatrix,
    extended: &Decomposition,
    extended_pou: &PartitionOfUnity,
    neumann_extended: &SparseSymMatrix,
    tau: f64,
) -> Result<EigenPairSet> {
    let mut set = solve_geneo_gevp(i, a, extended, extended_pou, neumann_extended, tau)?;
    set.kind = GevpKind::Annex;
    Ok(set)
}

/// Local DOFs of an extended subdomain where the two pencil matrices share
/// their rows: weight 1 and every matrix neighbour with weight 1.
pub fn annex_interior_dofs(
    a: &SparseSymMatrix,
    extended: &Decomposition,
    extended_pou: &PartitionOfUnity,
    i: usize,
) -> Vec<usize> {
    let dofs = extended.dofs(i);
    let w = extended_pou.weights(i);
    let local = |g: usize| dofs.binary_search(&g).ok();
    (0..dofs.len())
        .filter(|&k| {
            w[k] == 1.0
                && a
                    .row(dofs[k])
                    .all(|(g, _)| local(g).is_some_and(|l| w[l] == 1.0))
        })
        .collect()
}

/// Largest relative size of `(A_neu v)` on interior DOFs over selected pairs
/// with `|lambda - 1| > 1e-6`; such eigenvectors are discrete-harmonic there.
pub fn annex_harmonicity_residual(
    set: &EigenPairSet,
    a: &SparseSymMatrix,
    extended: &Decomposition,
    extended_pou: &PartitionOfUnity,
    neumann_extended: &SparseSymMatrix,
) -> f64 {
    let interior = annex_interior_dofs(a, extended, extended_pou, set.subdomain);
    let scale = neumann_extended.max_abs().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for k in set.selected_indices() {
        if (set.values[k] - 1.0).abs() <= 1e-6 {
            continue;
        }
        let v: DVector<f64> = set.vectors.column(k).into_owned();
        let rv = neumann_extended.mul_vec(&v);
        let res = interior.iter().map(|&l| rv[l] * rv[l]).sum::<f64>().sqrt();
        worst = worst.max(res / (scale * v.norm()));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_global_stiffness, assemble_subdomain_neumann};
    use crate::coefficient::{CoefficientField, CoefficientPattern};
    use crate::decomposition::{build_overlapping_decomposition, build_partition_of_unity};
    use crate::mesh::{build_structured_mesh, DirichletSides, Mesh};

    fn setup(n: usize, parts: usize) -> (Mesh, CoefficientField, SparseSymMatrix, Decomposition, PartitionOfUnity) {
        let m = build_structured_mesh(
            1,
            n,
            DirichletSides {
                left: true,
                right: true,
                ..DirichletSides::none()
            },
        )
        .unwrap();
        let k = CoefficientField::generate(&m, CoefficientPattern::Constant(1.0)).unwrap();
        let a = assemble_global_stiffness(&m, &k).unwrap();
        let d = build_overlapping_decomposition(&m, [parts, 1], 1).unwrap();
        let p = build_partition_of_unity(&d).unwrap();
        (m, k, a, d, p)
    }

    /// Count of eigenvalues above `tau` from an independent Cholesky
    /// reduction, with the kernel of `r` handled by a tiny diagonal shift.
    use crate::dense::cholesky;

    fn oracle_count_above(l: &DMatrix<f64>, r: &DMatrix<f64>, tau: f64) -> usize {
        let n = r.nrows();
        let c = cholesky(r).map(|c| c.l()).unwrap_or_else(|| {
            let shifted = r + DMatrix::identity(n, n) * (1e-13 * r.amax());
            cholesky(&shifted).unwrap().l()
        });
        let ci = c.try_inverse().unwrap();
        let m = &ci * l * ci.transpose();
        crate::dense::sym_eigen(&m).values.iter().filter(|&&v| v > tau).count()
    }

    #[test]
    fn identical_pencil_has_unit_spectrum() {
        let (m, k, a, d, _) = setup(12, 3);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(1), d.dofs(1)).unwrap();
        let nd = neu.to_dense();
        let s = solve_threshold_pencil(1, GevpKind::Geneo, &nd, &nd, Selection::Above(0.5)).unwrap();
        // interior subdomain: the constant is a common kernel direction
        assert_eq!(s.degenerate.ncols(), 1);
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert_eq!(s.n_selected(), s.values.len());
        let s = solve_threshold_pencil(1, GevpKind::Geneo, &nd, &nd, Selection::Above(1.5)).unwrap();
        assert_eq!(s.n_selected(), 0);
        let _ = a;
    }

    #[test]
    fn zero_weights_select_nothing() {
        let (m, k, a, d, p) = setup(12, 3);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(1), d.dofs(1)).unwrap();
        let zero = PartitionOfUnity::from_weights(
            (0..d.len()).map(|i| DVector::zeros(d.dofs(i).len())).collect(),
        );
        let s = solve_geneo_gevp(1, &a, &d, &zero, &neu, 0.1).unwrap();
        assert!(s.values.iter().all(|&v| v.abs() < 1e-12));
        assert_eq!(s.n_selected(), 0);
        let _ = p;
    }

    #[test]
    fn geneo_selection_matches_oracle() {
        let (m, k, a, d, p) = setup(16, 2);
        for j in 0..2 {
            let neu = assemble_subdomain_neumann(&m, &k, d.cells(j), d.dofs(j)).unwrap();
            let s = solve_geneo_gevp(j, &a, &d, &p, &neu, 0.5).unwrap();
            let l = weighted_local_matrix(&a, &d, &p, j).unwrap();
            assert!(s.max_residual(&l, &neu.to_dense()) < 1e-8);
            // subdomains touch the Dirichlet ends, so the Neumann matrix is SPD
            assert_eq!(s.n_selected(), oracle_count_above(&l, &neu.to_dense(), 0.5));
        }
    }

    #[test]
    fn kernel_of_floating_neumann_matrix_is_selected() {
        let (m, k, a, d, p) = setup(12, 3);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(1), d.dofs(1)).unwrap();
        let s = solve_geneo_gevp(1, &a, &d, &p, &neu, 1e6).unwrap();
        assert_eq!(s.values[0], f64::INFINITY);
        assert!(s.selected[0]);
        assert_eq!(s.n_selected(), 1);
    }

    #[test]
    fn lower_problem_with_shifted_b() {
        let (m, k, _, d, _) = setup(16, 2);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(0), d.dofs(0)).unwrap();
        let n = neu.order();
        let b = neu
            .add_scaled(
                &SparseSymMatrix::from_dense(&DMatrix::identity(n, n), crate::sparse::Definiteness::Spd)
                    .unwrap(),
                1.0,
            )
            .unwrap();
        let s = solve_geneo2_lower_gevp(0, &neu, &b, 10.0).unwrap();
        assert!(s.values.iter().all(|&v| v < 1.0));
        assert_eq!(s.n_selected(), n);
        let min = s.values.iter().copied().fold(f64::INFINITY, f64::min);
        let s = solve_geneo2_lower_gevp(0, &neu, &b, min).unwrap();
        assert_eq!(s.n_selected(), 0);
    }

    #[test]
    fn upper_problem_empty_above_largest() {
        let (m, k, a, d, p) = setup(16, 2);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(0), d.dofs(0)).unwrap();
        let s = solve_geneo2_upper_gevp(0, &a, &d, &p, &neu, 0.5).unwrap();
        let top = s.max_finite().unwrap();
        let s = solve_geneo2_upper_gevp(0, &a, &d, &p, &neu, top * (1.0 + 1e-9)).unwrap();
        assert_eq!(s.n_selected(), 0);
    }

    #[test]
    fn nonpositive_threshold_is_rejected() {
        let (m, k, a, d, p) = setup(8, 2);
        let neu = assemble_subdomain_neumann(&m, &k, d.cells(0), d.dofs(0)).unwrap();
        assert!(solve_geneo_gevp(0, &a, &d, &p, &neu, 0.0).is_err());
        assert!(solve_geneo_gevp(5, &a, &d, &p, &neu, 0.1).is_err());
    }
}
