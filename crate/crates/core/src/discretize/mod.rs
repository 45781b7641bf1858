//! Structured-grid finite differences and P1/DG0 finite element assembly.

mod grid;
mod interval;
mod sparse;
mod tri;

pub use grid::{build_grid2d, build_grid2d_rect, fd_boundary_rhs, fd_laplacian, Grid2D};
pub use interval::{build_interval_mesh, IntervalMesh};
pub use sparse::{SparseMatrix, TripletBuilder};
pub use tri::{
    assemble_load, assemble_p1_mass, assemble_p1_stiffness, build_tri_mesh,
    p1_cell_gradient_operator, TriMesh,
};

use crate::entropy::Point;
use crate::error::Result;

/// Assembled P1 operators on the full node set, shared between the 1D and 2D
/// meshes so the saddle-problem builders are dimension-agnostic.
#[derive(Debug, Clone)]
pub struct P1Operators {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    /// Row sums of the consistent mass matrix. Vertex-quadrature loads are
    /// `lumped_mass[i] * f(coords[i])`.
    pub lumped_mass: Vec<f64>,
    pub coords: Vec<Point>,
    pub boundary: Vec<bool>,
    /// One operator per space dimension, mapping nodal values to per-cell
    /// constant gradient components.
    pub grad_ops: Vec<SparseMatrix>,
    pub cell_areas: Vec<f64>,
    pub cell_midpoints: Vec<Point>,
}

impl P1Operators {
    pub fn from_tri_mesh(mesh: &TriMesh) -> Result<Self> {
        let (gx, gy) = p1_cell_gradient_operator(mesh)?;
        Ok(P1Operators {
            stiffness: assemble_p1_stiffness(mesh)?,
            mass: assemble_p1_mass(mesh, false)?,
            lumped_mass: assemble_p1_mass(mesh, true)?.row_sums(),
            coords: mesh.vertices.clone(),
            boundary: mesh.boundary.clone(),
            grad_ops: vec![gx, gy],
            cell_areas: mesh.areas.clone(),
            cell_midpoints: (0..mesh.num_cells()).map(|t| mesh.cell_midpoint(t)).collect(),
        })
    }

    pub fn from_interval_mesh(mesh: &IntervalMesh) -> Result<Self> {
        let n = mesh.num_nodes();
        Ok(P1Operators {
            stiffness: mesh.stiffness(),
            mass: mesh.mass(false),
            lumped_mass: mesh.mass(true).row_sums(),
            coords: (0..n).map(|i| mesh.coords(i)).collect(),
            boundary: (0..n).map(|i| mesh.is_boundary(i)).collect(),
            grad_ops: vec![mesh.cell_gradient()],
            cell_areas: vec![mesh.h; mesh.num_cells()],
            cell_midpoints: (0..mesh.num_cells()).map(|c| mesh.cell_midpoint(c)).collect(),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_areas.len()
    }

    pub fn space_dim(&self) -> usize {
        self.grad_ops.len()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| !self.boundary[i]).collect()
    }

    /// Vertex-quadrature load vector on the full node set.
    pub fn load(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.coords
            .iter()
            .zip(self.lumped_mass.iter())
            .map(|(&p, &w)| w * f(p))
            .collect()
    }
}
