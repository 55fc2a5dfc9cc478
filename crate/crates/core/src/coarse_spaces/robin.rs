//! Robin-type local matrices `B_i = A_neu + alpha * M_interface`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::assemble_subdomain_neumann;
use crate::coefficient::CoefficientField;
use crate::decomposition::Decomposition;
use crate::error::{invalid, Result};
use crate::mesh::Mesh;
use crate::sparse::{Definiteness, SparseSymMatrix};

/// Interface facets of subdomain `i`: boundary facets of the subdomain that
/// are interior to the mesh. In 1D a facet is a vertex `(v, v)`, in 2D an
/// edge.
pub fn interface_facets(mesh: &Mesh, decomposition: &Decomposition, i: usize) -> Result<Vec<(usize, usize)>> {
    let cells = &decomposition.subdomain(i)?.cells;
    if mesh.dimension() == 1 {
        let mut count = vec![0u8; mesh.n_vertices()];
        for &c in cells {
            for &v in mesh.cell(c) {
                count[v] += 1;
            }
        }
        return Ok((0..mesh.n_vertices())
            .filter(|&v| count[v] == 1 && mesh.vertex_cells(v).len() == 2)
            .map(|v| (v, v))
            .collect());
    }
    let mut count: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    for &c in cells {
        let v = mesh.cell(c);
        for e in 0..3 {
            let (a, b) = (v[e], v[(e + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    Ok(count
        .into_iter()
        .filter(|&((a, b), k)| k == 1 && mesh.edge_cell_count(a, b) == 2)
        .map(|(e, _)| e)
        .collect())
}

/// Measure of `dOmega_i \ dOmega` (number of interface points in 1D).
pub fn interface_measure(mesh: &Mesh, decomposition: &Decomposition, i: usize) -> Result<f64> {
    let facets = interface_facets(mesh, decomposition, i)?;
    Ok(facets.iter().map(|&(a, b)| facet_length(mesh, a, b)).sum())
}

fn facet_length(mesh: &Mesh, a: usize, b: usize) -> f64 {
    if a == b {
        return 1.0;
    }
    let (p, q) = (mesh.coords(a), mesh.coords(b));
    let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
    (dx * dx + dy * dy).sqrt()
}

/// `B_i = A_neu + alpha * M`, where `M` is the P1 mass matrix of the
/// interface facets restricted to the subdomain DOFs.
pub fn build_robin_matrix(
    mesh: &Mesh,
    coeff: &CoefficientField,
    decomposition: &Decomposition,
    i: usize,
    alpha: f64,
) -> Result<SparseSymMatrix> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("Robin parameter must be positive"));
    }
    let sub = decomposition.subdomain(i)?;
    let neumann = assemble_subdomain_neumann(mesh, coeff, &sub.cells, &sub.dofs)?;
    let local = |v: usize| {
        mesh.vertex_dof(v)
            .and_then(|d| sub.dofs.binary_search(&d).ok())
    };
    let mut triplets = Vec::new();
    for (a, b) in interface_facets(mesh, decomposition, i)? {
        if a == b {
            if let Some(l) = local(a) {
                triplets.push((l, l, alpha));
            }
            continue;
        }
        let w = alpha * facet_length(mesh, a, b) / 6.0;
        let (la, lb) = (local(a), local(b));
        if let Some(x) = la {
            triplets.push((x, x, 2.0 * w));
        }
        if let Some(y) = lb {
            triplets.push((y, y, 2.0 * w));
        }
        if let (Some(x), Some(y)) = (la, lb) {
            triplets.push((x, y, w));
            triplets.push((y, x, w));
        }
    }
    let mass = SparseSymMatrix::from_triplets(sub.dofs.len(), &triplets, Definiteness::Spsd)?;
    Ok(neumann.add_scaled(&mass, 1.0)?.with_definiteness(Definiteness::Spd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::CoefficientPattern;
    use crate::decomposition::build_overlapping_decomposition;
    use crate::dense::cholesky;
    use crate::mesh::{build_structured_mesh, DirichletSides};
    use nalgebra::DVector;

    #[test]
    fn constant_vector_sees_interface_mass() {
        // no Dirichlet DOFs, so the Neumann part annihilates constants
        let m = build_structured_mesh(2, 6, DirichletSides::none()).unwrap();
        let k = CoefficientField::generate(&m, CoefficientPattern::Constant(3.0)).unwrap();
        let d = build_overlapping_decomposition(&m, [3, 3], 1).unwrap();
        for i in 0..d.len() {
            let b = build_robin_matrix(&m, &k, &d, i, 2.0).unwrap();
            let one = DVector::from_element(b.order(), 1.0);
            let energy = b.mul_vec(&one).dot(&one);
            let oracle = 2.0 * interface_measure(&m, &d, i).unwrap();
            assert!((energy - oracle).abs() < 1e-12 * oracle);
        }
        // centre subdomain: a 4x4 block of squares with two corners cut along
        // a diagonal, since growth picks up only one triangle of those squares
        let expected = (12.0 + 2.0 * core::f64::consts::SQRT_2) / 6.0;
        assert!((interface_measure(&m, &d, 4).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn one_d_interface_points() {
        let m = build_structured_mesh(1, 12, DirichletSides::all()).unwrap();
        let d = build_overlapping_decomposition(&m, [3, 1], 1).unwrap();
        assert_eq!(interface_facets(&m, &d, 0).unwrap(), alloc::vec![(5, 5)]);
        assert_eq!(interface_measure(&m, &d, 1).unwrap(), 2.0);
    }

    #[test]
    fn energy_is_affine_in_alpha_and_spd() {
        let m = build_structured_mesh(2, 8, DirichletSides::all()).unwrap();
        let k = CoefficientField::generate(
            &m,
            CoefficientPattern::Checkerboard {
                contrast: 1e4,
                blocks: 4,
            },
        )
        .unwrap();
        let d = build_overlapping_decomposition(&m, [2, 2], 1).unwrap();
        for i in 0..d.len() {
            let b1 = build_robin_matrix(&m, &k, &d, i, 1.0).unwrap();
            let b2 = build_robin_matrix(&m, &k, &d, i, 2.0).unwrap();
            let b3 = build_robin_matrix(&m, &k, &d, i, 3.0).unwrap();
            let x = DVector::from_fn(b1.order(), |r, _| (r as f64 * 0.37).sin());
            let e = |b: &SparseSymMatrix| b.mul_vec(&x).dot(&x);
            assert!(((e(&b3) - e(&b2)) - (e(&b2) - e(&b1))).abs() < 1e-9 * e(&b3));
            assert!(cholesky(&b1.to_dense()).is_some());
        }
        assert!(build_robin_matrix(&m, &k, &d, 0, 0.0).is_err());
    }
}
