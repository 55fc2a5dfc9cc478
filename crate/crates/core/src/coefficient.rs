//! Piecewise-constant diffusion coefficients.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::mesh::Mesh;

/// Named coefficient generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientPattern {
    Constant(f64),
    /// `blocks x blocks` checkerboard (alternating segments in 1D); the
    /// "black" blocks carry `contrast`, the others 1.
    Checkerboard { contrast: f64, blocks: usize },
    /// `count` equally spaced high-coefficient stripes along x
    /// (perpendicular to y in 2D, segments in 1D).
    Channels { contrast: f64, count: usize },
}

/// One strictly positive value per mesh cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    values: Vec<f64>,
}

impl CoefficientField {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some((c, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(invalid(alloc::format!(
                "diffusion coefficient must be positive and finite, cell {c} has {v}"
            )));
        }
        Ok(Self { values })
    }

    pub fn generate(mesh: &Mesh, pattern: CoefficientPattern) -> Result<Self> {
        let values = (0..mesh.n_cells())
            .map(|c| {
                let [x, y] = mesh.cell_centroid(c);
                match pattern {
                    CoefficientPattern::Constant(v) => v,
                    CoefficientPattern::Checkerboard { contrast, blocks } => {
                        let b = blocks.max(1) as f64;
                        let bx = (x * b).floor() as usize;
                        let by = if mesh.dimension() == 2 {
                            (y * b).floor() as usize
                        } else {
                            0
                        };
                        if (bx + by) % 2 == 1 {
                            contrast
                        } else {
                            1.0
                        }
                    }
                    CoefficientPattern::Channels { contrast, count } => {
                        let coord = if mesh.dimension() == 2 { y } else { x };
                        let stripes = 2 * count + 1;
                        let s = (coord * stripes as f64).floor() as usize;
                        if s % 2 == 1 {
                            contrast
                        } else {
                            1.0
                        }
                    }
                }
            })
            .collect();
        Self::from_values(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_values(self.values.iter().map(|v| v * c).collect())
    }

    /// Ratio between the largest and smallest cell value.
    pub fn contrast(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi / lo
    }
}
