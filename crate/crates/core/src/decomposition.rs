//! Overlapping decompositions of a structured mesh into subdomains that are
//! unions of cells, with their DOF index sets, restriction operators and the
//! algebraic partition of unity.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::sparse::SparseSymMatrix;

/// One subdomain: its cells and the DOFs whose basis functions meet it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subdomain {
    pub cells: Vec<usize>,
    pub dofs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    subdomains: Vec<Subdomain>,
    n_dofs: usize,
    n_cells: usize,
    overlap: usize,
}

/// Diagonal weights `D_i` with `sum_i R_i^T D_i R_i = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    weights: Vec<DVector<f64>>,
}

impl Decomposition {
    /// Builds a decomposition from explicit cell sets; DOF sets follow from
    /// the mesh. Used for hand-made layouts.
    pub fn from_cell_sets(mesh: &Mesh, cell_sets: Vec<Vec<usize>>, overlap: usize) -> Result<Self> {
        let mut covered = vec![false; mesh.n_cells()];
        let mut subdomains = Vec::with_capacity(cell_sets.len());
        for mut cells in cell_sets {
            cells.sort_unstable();
            cells.dedup();
            if cells.is_empty() {
                return Err(invalid("empty subdomain"));
            }
            for &c in &cells {
                if c >= mesh.n_cells() {
                    return Err(invalid(format!("cell {c} is not a mesh cell")));
                }
                covered[c] = true;
            }
            let dofs = mesh.dofs_of_cells(&cells);
            subdomains.push(Subdomain { cells, dofs });
        }
        if let Some(c) = covered.iter().position(|&x| !x) {
            return Err(invalid(format!("cell {c} belongs to no subdomain")));
        }
        Ok(Self {
            subdomains,
            n_dofs: mesh.n_dofs(),
            n_cells: mesh.n_cells(),
            overlap,
        })
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn subdomain(&self, i: usize) -> Result<&Subdomain> {
        self.subdomains.get(i).ok_or(Error::UnknownSubdomain {
            index: i,
            count: self.subdomains.len(),
        })
    }

    pub fn dofs(&self, i: usize) -> &[usize] {
        &self.subdomains[i].dofs
    }

    pub fn cells(&self, i: usize) -> &[usize] {
        &self.subdomains[i].cells
    }

    /// `R_i x`.
    pub fn restrict(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let dofs = self.dofs(i);
        DVector::from_fn(dofs.len(), |k, _| x[dofs[k]])
    }

    /// `y += R_i^T x_i`.
    pub fn prolong_add(&self, i: usize, local: &DVector<f64>, y: &mut DVector<f64>) {
        for (k, &g) in self.dofs(i).iter().enumerate() {
            y[g] += local[k];
        }
    }

    /// `R_i^T x_i` as a fresh vector.
    pub fn prolong(&self, i: usize, local: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n_dofs);
        self.prolong_add(i, local, &mut y);
        y
    }

    /// Number of subdomains containing each DOF.
    pub fn dof_multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0usize; self.n_dofs];
        for s in &self.subdomains {
            for &d in &s.dofs {
                m[d] += 1;
            }
        }
        m
    }

    /// Number of subdomains containing each cell.
    pub fn cell_multiplicity(&self) -> Vec<usize> {
        let mut m = vec![0usize; self.n_cells];
        for s in &self.subdomains {
            for &c in &s.cells {
                m[c] += 1;
            }
        }
        m
    }

    /// Same decomposition with subdomains reordered by `perm`
    /// (new subdomain `k` is old subdomain `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            subdomains: perm.iter().map(|&p| self.subdomains[p].clone()).collect(),
            ..self.clone()
        }
    }
}

/// Adds every cell sharing a vertex with the set, `layers` times.
fn grow(mesh: &Mesh, cells: &[usize], layers: usize) -> Vec<usize> {
    let mut inside = vec![false; mesh.n_cells()];
    for &c in cells {
        inside[c] = true;
    }
    let mut current: Vec<usize> = cells.to_vec();
    for _ in 0..layers {
        let mut added = Vec::new();
        for &c in &current {
            for &v in mesh.cell(c) {
                for &nb in mesh.vertex_cells(v) {
                    if !inside[nb] {
                        inside[nb] = true;
                        added.push(nb);
                    }
                }
            }
        }
        current.extend(added);
    }
    (0..mesh.n_cells()).filter(|&c| inside[c]).collect()
}

/// Cartesian grid of `grid[0] x grid[1]` subdomains (use `[n, 1]` in 1D),
/// grown by `overlap_layers` rings of vertex-adjacent cells. Subdomains are
/// numbered with the x index running fastest.
pub fn build_overlapping_decomposition(
    mesh: &Mesh,
    grid: [usize; 2],
    overlap_layers: usize,
) -> Result<Decomposition> {
    let n = mesh.cells_per_direction();
    let (gx, gy) = (grid[0], if mesh.dimension() == 1 { 1 } else { grid[1] });
    if mesh.dimension() == 1 && grid[1] > 1 {
        return Err(invalid("a 1D mesh takes a subdomain grid of the form [N, 1]"));
    }
    if gx == 0 || gy == 0 || !n.is_multiple_of(gx) || (mesh.dimension() == 2 && !n.is_multiple_of(gy)) {
        return Err(invalid(format!(
            "subdomain grid {gx}x{gy} does not divide the {n}-cell grid"
        )));
    }
    let (bx, by) = (n / gx, if mesh.dimension() == 2 { n / gy } else { 1 });
    let mut base = vec![Vec::new(); gx * gy];
    for c in 0..mesh.n_cells() {
        let (ix, iy) = mesh.cell_grid_position(c);
        base[(iy / by) * gx + ix / bx].push(c);
    }
    let sets: Vec<Vec<usize>> = base.iter().map(|s| grow(mesh, s, overlap_layers)).collect();
    if sets.len() > 1 {
        if let Some(i) = sets.iter().position(|s| s.len() == mesh.n_cells()) {
            return Err(invalid(format!(
                "overlap {overlap_layers} makes subdomain {i} cover the whole mesh"
            )));
        }
    }
    Decomposition::from_cell_sets(mesh, sets, overlap_layers)
}

/// Inverse-multiplicity weights `(D_i)_kk = 1 / #{j : k in N_j}`.
pub fn build_partition_of_unity(decomposition: &Decomposition) -> Result<PartitionOfUnity> {
    let mult = decomposition.dof_multiplicity();
    if let Some(d) = mult.iter().position(|&m| m == 0) {
        return Err(invalid(format!("DOF {d} belongs to no subdomain")));
    }
    let weights = decomposition
        .subdomains()
        .iter()
        .map(|s| DVector::from_iterator(s.dofs.len(), s.dofs.iter().map(|&d| 1.0 / mult[d] as f64)))
        .collect();
    Ok(PartitionOfUnity { weights })
}

impl PartitionOfUnity {
    pub fn from_weights(weights: Vec<DVector<f64>>) -> Self {
        Self { weights }
    }

    pub fn weights(&self, i: usize) -> &DVector<f64> {
        &self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_i R_i^T D_i R_i x`.
    pub fn apply_sum(&self, decomposition: &Decomposition, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(x.len());
        for i in 0..decomposition.len() {
            let local = decomposition.restrict(i, x).component_mul(&self.weights[i]);
            decomposition.prolong_add(i, &local, &mut y);
        }
        y
    }

    /// Entrywise `max |sum_i R_i^T D_i R_i - I|`; the sum is diagonal, so only
    /// diagonal entries can deviate.
    pub fn identity_defect(&self, decomposition: &Decomposition) -> f64 {
        let mut diag = vec![0.0; decomposition.n_dofs()];
        for i in 0..decomposition.len() {
            for (k, &g) in decomposition.dofs(i).iter().enumerate() {
                diag[g] += self.weights[i][k];
            }
        }
        diag.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()))
    }
}

/// `k0 = max_i #{ j : R_j A R_i^T != 0 }`, with entries below
/// `1e-14 * max|A|` treated as zero.
pub fn compute_k0(decomposition: &Decomposition, a: &SparseSymMatrix) -> usize {
    let thr = 1e-14 * a.max_abs();
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); decomposition.n_dofs()];
    for (j, s) in decomposition.subdomains().iter().enumerate() {
        for &d in &s.dofs {
            owners[d].push(j);
        }
    }
    decomposition
        .subdomains()
        .iter()
        .map(|s| {
            let mut touched = BTreeSet::new();
            for &l in &s.dofs {
                for (k, v) in a.row(l) {
                    if v.abs() > thr {
                        touched.extend(owners[k].iter().copied());
                    }
                }
            }
            touched.len()
        })
        .max()
        .unwrap_or(0)
}

/// Largest number of subdomains sharing a cell.
pub fn compute_k1(decomposition: &Decomposition) -> usize {
    decomposition
        .cell_multiplicity()
        .into_iter()
        .max()
        .unwrap_or(0)
}

/// Decomposition grown by `layers` rings of cells, with the partition of
/// unity inherited from `pou`: unchanged on `N_i`, zero on the added DOFs.
pub fn extend_decomposition(
    mesh: &Mesh,
    decomposition: &Decomposition,
    pou: &PartitionOfUnity,
    layers: usize,
) -> Result<(Decomposition, PartitionOfUnity)> {
    let sets: Vec<Vec<usize>> = decomposition
        .subdomains()
        .iter()
        .map(|s| grow(mesh, &s.cells, layers))
        .collect();
    if sets.len() > 1 {
        if let Some(i) = sets.iter().position(|s| s.len() == mesh.n_cells()) {
            return Err(invalid(format!(
                "extension by {layers} layers makes subdomain {i} cover the whole mesh"
            )));
        }
    }
    let extended =
        Decomposition::from_cell_sets(mesh, sets, decomposition.overlap() + layers)?;
    let weights = (0..extended.len())
        .map(|i| {
            let base = decomposition.dofs(i);
            let w = pou.weights(i);
            let ext = extended.dofs(i);
            DVector::from_iterator(
                ext.len(),
                ext.iter().map(|d| match base.binary_search(d) {
                    Ok(p) => w[p],
                    Err(_) => 0.0,
                }),
            )
        })
        .collect();
    Ok((extended, PartitionOfUnity::from_weights(weights)))
}
