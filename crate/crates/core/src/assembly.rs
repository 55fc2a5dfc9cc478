//! P1 stiffness assembly for `-div(K grad u)` with cellwise constant `K`.
//!
//! Element matrices are closed-form, so assembly is exact up to rounding.
//! Contributions are accumulated in increasing cell order.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::coefficient::CoefficientField;
use crate::error::{invalid, Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{Definiteness, SparseSymMatrix};

/// Right-hand side descriptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// `f` constant over the domain (`Uniform(0.0)` is the zero load).
    Uniform(f64),
    /// Unit load on a single DOF: the vector `e_k`.
    PointLoad(usize),
}

/// Local stiffness matrix of cell `c` with unit coefficient; only the
/// leading `dimension + 1` rows/columns are meaningful.
pub fn element_stiffness(mesh: &Mesh, c: usize) -> [[f64; 3]; 3] {
    let mut ke = [[0.0; 3]; 3];
    if mesh.dimension() == 1 {
        let inv_h = 1.0 / mesh.h();
        ke[0][0] = inv_h;
        ke[1][1] = inv_h;
        ke[0][1] = -inv_h;
        ke[1][0] = -inv_h;
        return ke;
    }
    let v = mesh.cell(c);
    let p = [mesh.coords(v[0]), mesh.coords(v[1]), mesh.coords(v[2])];
    let twice_area =
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut b = [0.0; 3];
    let mut g = [0.0; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = p[j][1] - p[k][1];
        g[i] = p[k][0] - p[j][0];
    }
    let scale = 1.0 / (2.0 * twice_area.abs());
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = scale * (b[i] * b[j] + g[i] * g[j]);
        }
    }
    ke
}

fn check_coefficient(mesh: &Mesh, coeff: &CoefficientField) -> Result<()> {
    if coeff.len() != mesh.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_cells(),
            got: coeff.len(),
        });
    }
    if coeff.values().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid("diffusion coefficient must be strictly positive"));
    }
    Ok(())
}

/// Assembles the bilinear form over `cells` on the sorted DOF set `dofs`.
/// Every free vertex of a listed cell must be in `dofs`, and every DOF must be
/// touched by at least one cell.
fn assemble_on_cells(
    mesh: &Mesh,
    coeff: &CoefficientField,
    cells: &[usize],
    dofs: &[usize],
    definiteness: Definiteness,
) -> Result<SparseSymMatrix> {
    check_coefficient(mesh, coeff)?;
    let mut local = vec![usize::MAX; mesh.n_dofs()];
    for (k, &d) in dofs.iter().enumerate() {
        if d >= mesh.n_dofs() {
            return Err(invalid(alloc::format!("DOF {d} is not a mesh DOF")));
        }
        local[d] = k;
    }
    let mut touched = vec![false; dofs.len()];
    let nv = mesh.vertices_per_cell();
    let mut triplets = Vec::with_capacity(cells.len() * nv * nv);
    for &c in cells {
        if c >= mesh.n_cells() {
            return Err(invalid(alloc::format!("cell {c} is not a mesh cell")));
        }
        let ke = element_stiffness(mesh, c);
        let kc = coeff.value(c);
        let verts = mesh.cell(c);
        let mut ids = [usize::MAX; 3];
        for (a, &v) in verts.iter().enumerate() {
            if let Some(d) = mesh.vertex_dof(v) {
                let l = local[d];
                if l == usize::MAX {
                    return Err(invalid(alloc::format!(
                        "DOF set is inconsistent with the cells: DOF {d} of cell {c} missing"
                    )));
                }
                touched[l] = true;
                ids[a] = l;
            }
        }
        for a in 0..nv {
            if ids[a] == usize::MAX {
                continue;
            }
            for b in 0..nv {
                if ids[b] != usize::MAX {
                    triplets.push((ids[a], ids[b], kc * ke[a][b]));
                }
            }
        }
    }
    if let Some(k) = touched.iter().position(|t| !t) {
        return Err(invalid(alloc::format!(
            "DOF set is inconsistent with the cells: DOF {} touches no cell",
            dofs[k]
        )));
    }
    SparseSymMatrix::from_triplets(dofs.len(), &triplets, definiteness)
}

/// Global stiffness matrix `A` on the free DOFs.
pub fn assemble_global_stiffness(
    mesh: &Mesh,
    coeff: &CoefficientField,
) -> Result<SparseSymMatrix> {
    let cells: Vec<usize> = (0..mesh.n_cells()).collect();
    let dofs: Vec<usize> = (0..mesh.n_dofs()).collect();
    let has_dirichlet = mesh.n_dofs() < mesh.n_vertices();
    let tag = if has_dirichlet {
        Definiteness::Spd
    } else {
        Definiteness::Spsd
    };
    assemble_on_cells(mesh, coeff, &cells, &dofs, tag)
}

/// Neumann matrix of a subdomain: the bilinear form integrated over
/// `subdomain_cells` only, on the subdomain DOF set `dof_set`.
pub fn assemble_subdomain_neumann(
    mesh: &Mesh,
    coeff: &CoefficientField,
    subdomain_cells: &[usize],
    dof_set: &[usize],
) -> Result<SparseSymMatrix> {
    let expected = mesh.dofs_of_cells(subdomain_cells);
    if expected.as_slice() != dof_set {
        return Err(invalid(
            "DOF set is not the set of free vertices of the subdomain cells",
        ));
    }
    assemble_on_cells(mesh, coeff, subdomain_cells, dof_set, Definiteness::Spsd)
}

/// Load vector on the free DOFs.
pub fn assemble_rhs(mesh: &Mesh, source: Source) -> Result<DVector<f64>> {
    let n = mesh.n_dofs();
    match source {
        Source::PointLoad(k) => {
            if k >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: k + 1,
                });
            }
            let mut f = DVector::zeros(n);
            f[k] = 1.0;
            Ok(f)
        }
        Source::Uniform(value) => {
            let mut f = DVector::zeros(n);
            if value == 0.0 {
                return Ok(f);
            }
            let share = 1.0 / mesh.vertices_per_cell() as f64;
            for c in 0..mesh.n_cells() {
                let w = value * mesh.cell_measure(c) * share;
                for &v in mesh.cell(c) {
                    if let Some(d) = mesh.vertex_dof(v) {
                        f[d] += w;
                    }
                }
            }
            Ok(f)
        }
    }
}
