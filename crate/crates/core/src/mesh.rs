//! Structured P1 meshes on the unit interval and the unit square.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Sides of the domain carrying a homogeneous Dirichlet condition.
/// In 1D only `left` (x = 0) and `right` (x = 1) are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DirichletSides {
    pub left: bool,
    pub right: bool,
    pub bottom: bool,
    pub top: bool,
}

impl DirichletSides {
    pub const fn all() -> Self {
        Self {
            left: true,
            right: true,
            bottom: true,
            top: true,
        }
    }

    pub const fn none() -> Self {
        Self {
            left: false,
            right: false,
            bottom: false,
            top: false,
        }
    }

    pub fn any(&self) -> bool {
        self.left || self.right || self.bottom || self.top
    }
}

/// Uniform simplicial mesh. In 2D every square of the `n x n` grid is split
/// into the triangles `(v00, v10, v11)` and `(v00, v11, v01)`.
#[derive(Debug, Clone)]
pub struct Mesh {
    dimension: usize,
    cells_per_direction: usize,
    coords: Vec<[f64; 2]>,
    cells: Vec<usize>,
    dirichlet: Vec<bool>,
    vertex_dof: Vec<Option<usize>>,
    dof_vertex: Vec<usize>,
    vertex_cells: Vec<Vec<usize>>,
    edge_cells: BTreeMap<(usize, usize), u8>,
}

impl Mesh {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cells_per_direction(&self) -> usize {
        self.cells_per_direction
    }

    /// Uniform spacing `h = 1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_direction as f64
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / self.vertices_per_cell()
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_vertex.len()
    }

    pub fn vertices_per_cell(&self) -> usize {
        self.dimension + 1
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.vertices_per_cell();
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn coords(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.dirichlet[v]
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    pub fn dof_vertex(&self, dof: usize) -> usize {
        self.dof_vertex[dof]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    /// Number of cells sharing the edge `(a, b)` (2D only); 1 on the boundary.
    pub fn edge_cell_count(&self, a: usize, b: usize) -> u8 {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_cells.get(&key).copied().unwrap_or(0)
    }

    /// Grid position of the square (2D) or segment (1D) a cell belongs to.
    pub fn cell_grid_position(&self, c: usize) -> (usize, usize) {
        let n = self.cells_per_direction;
        if self.dimension == 1 {
            (c, 0)
        } else {
            let q = c / 2;
            (q % n, q / n)
        }
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 2] {
        let verts = self.cell(c);
        let k = verts.len() as f64;
        let mut x = [0.0; 2];
        for &v in verts {
            x[0] += self.coords[v][0];
            x[1] += self.coords[v][1];
        }
        [x[0] / k, x[1] / k]
    }

    /// Measure (length or area) of a cell.
    pub fn cell_measure(&self, _c: usize) -> f64 {
        let h = self.h();
        if self.dimension == 1 {
            h
        } else {
            0.5 * h * h
        }
    }

    /// Free DOFs of the vertices of the given cells, sorted and unique.
    pub fn dofs_of_cells(&self, cells: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.n_dofs()];
        for &c in cells {
            for &v in self.cell(c) {
                if let Some(d) = self.vertex_dof[v] {
                    seen[d] = true;
                }
            }
        }
        (0..self.n_dofs()).filter(|&d| seen[d]).collect()
    }
}

/// Builds the structured mesh with `cells_per_direction` cells along each
/// axis. Dirichlet vertices are eliminated from the DOF numbering; the
/// remaining vertices are numbered in lexicographic vertex order.
pub fn build_structured_mesh(
    dimension: usize,
    cells_per_direction: usize,
    dirichlet: DirichletSides,
) -> Result<Mesh> {
    if dimension != 1 && dimension != 2 {
        return Err(invalid(alloc::format!(
            "mesh dimension must be 1 or 2, got {dimension}"
        )));
    }
    if cells_per_direction < 2 {
        return Err(invalid("at least 2 cells per direction are required"));
    }
    let n = cells_per_direction;
    let h = 1.0 / n as f64;
    let mut coords = Vec::new();
    let mut flags = Vec::new();
    let mut cells = Vec::new();

    if dimension == 1 {
        for i in 0..=n {
            coords.push([i as f64 * h, 0.0]);
            flags.push((i == 0 && dirichlet.left) || (i == n && dirichlet.right));
        }
        for i in 0..n {
            cells.extend_from_slice(&[i, i + 1]);
        }
    } else {
        for iy in 0..=n {
            for ix in 0..=n {
                coords.push([ix as f64 * h, iy as f64 * h]);
                flags.push(
                    (ix == 0 && dirichlet.left)
                        || (ix == n && dirichlet.right)
                        || (iy == 0 && dirichlet.bottom)
                        || (iy == n && dirichlet.top),
                );
            }
        }
        let vid = |ix: usize, iy: usize| iy * (n + 1) + ix;
        for iy in 0..n {
            for ix in 0..n {
                let (v00, v10, v01, v11) =
                    (vid(ix, iy), vid(ix + 1, iy), vid(ix, iy + 1), vid(ix + 1, iy + 1));
                cells.extend_from_slice(&[v00, v10, v11]);
                cells.extend_from_slice(&[v00, v11, v01]);
            }
        }
    }

    let mut vertex_dof = vec![None; coords.len()];
    let mut dof_vertex = Vec::new();
    for (v, &d) in flags.iter().enumerate() {
        if !d {
            vertex_dof[v] = Some(dof_vertex.len());
            dof_vertex.push(v);
        }
    }

    let k = dimension + 1;
    let ncells = cells.len() / k;
    let mut vertex_cells = vec![Vec::new(); coords.len()];
    let mut edge_cells = BTreeMap::new();
    for c in 0..ncells {
        let verts = &cells[c * k..(c + 1) * k];
        for &v in verts {
            vertex_cells[v].push(c);
        }
        if dimension == 2 {
            for e in 0..3 {
                let (a, b) = (verts[e], verts[(e + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                *edge_cells.entry(key).or_insert(0u8) += 1;
            }
        }
    }

    Ok(Mesh {
        dimension,
        cells_per_direction: n,
        coords,
        cells,
        dirichlet: flags,
        vertex_dof,
        dof_vertex,
        vertex_cells,
        edge_cells,
    })
}
