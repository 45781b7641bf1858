//! Uniform 1D interval partition with P1 hat functions: the one-dimensional
//! analogue of the triangle-mesh assembly.

use crate::discretize::SparseMatrix;
use crate::entropy::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct IntervalMesh {
    /// Node coordinates, ascending; n cells give n + 1 nodes.
    pub nodes: Vec<f64>,
    pub h: f64,
}

pub fn build_interval_mesh(n: usize, endpoints: [f64; 2]) -> Result<IntervalMesh> {
    let [a, b] = endpoints;
    if n < 1 {
        return Err(Error::invalid("interval mesh needs at least one cell"));
    }
    if b <= a {
        return Err(Error::invalid("interval is empty"));
    }
    let h = (b - a) / n as f64;
    Ok(IntervalMesh {
        nodes: (0..=n).map(|i| a + i as f64 * h).collect(),
        h,
    })
}

impl IntervalMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i == 0 || i == self.nodes.len() - 1
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (1..self.nodes.len() - 1).collect()
    }

    pub fn coords(&self, i: usize) -> Point {
        [self.nodes[i], 0.0]
    }

    pub fn cell_midpoint(&self, c: usize) -> Point {
        [0.5 * (self.nodes[c] + self.nodes[c + 1]), 0.0]
    }

    pub fn stiffness(&self) -> SparseMatrix {
        let mut trips = Vec::new();
        for c in 0..self.num_cells() {
            let k = 1.0 / self.h;
            trips.push((c, c, k));
            trips.push((c + 1, c + 1, k));
            trips.push((c, c + 1, -k));
            trips.push((c + 1, c, -k));
        }
        SparseMatrix::from_triplets(self.num_nodes(), self.num_nodes(), &trips).unwrap()
    }

    pub fn mass(&self, lumped: bool) -> SparseMatrix {
        let mut trips = Vec::new();
        for c in 0..self.num_cells() {
            if lumped {
                trips.push((c, c, self.h / 2.0));
                trips.push((c + 1, c + 1, self.h / 2.0));
            } else {
                trips.push((c, c, self.h / 3.0));
                trips.push((c + 1, c + 1, self.h / 3.0));
                trips.push((c, c + 1, self.h / 6.0));
                trips.push((c + 1, c, self.h / 6.0));
            }
        }
        SparseMatrix::from_triplets(self.num_nodes(), self.num_nodes(), &trips).unwrap()
    }

    /// Per-cell derivative operator: (G u)_c = (u_{c+1} − u_c)/h.
    pub fn cell_gradient(&self) -> SparseMatrix {
        let mut trips = Vec::new();
        for c in 0..self.num_cells() {
            trips.push((c, c, -1.0 / self.h));
            trips.push((c, c + 1, 1.0 / self.h));
        }
        SparseMatrix::from_triplets(self.num_cells(), self.num_nodes(), &trips).unwrap()
    }

    /// Load vector by vertex quadrature (h/2 per incident cell).
    pub fn load(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let n = self.num_nodes();
        let mut load = vec![0.0; n];
        for c in 0..self.num_cells() {
            load[c] += self.h / 2.0 * f(self.coords(c));
            load[c + 1] += self.h / 2.0 * f(self.coords(c + 1));
        }
        load
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn five_nodes_quarter_spacing() {
        let mesh = build_interval_mesh(4, [0.0, 1.0]).unwrap();
        assert_eq!(mesh.num_nodes(), 5);
        assert_relative_eq!(mesh.h, 0.25);
        assert!(mesh.is_boundary(0) && mesh.is_boundary(4) && !mesh.is_boundary(2));
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        let mesh = build_interval_mesh(6, [0.0, 2.0]).unwrap();
        for s in mesh.stiffness().row_sums() {
            assert!(s.abs() < 1e-14);
        }
    }

    #[test]
    fn mass_total_is_length() {
        let mesh = build_interval_mesh(7, [0.0, 3.0]).unwrap();
        for lumped in [true, false] {
            let total: f64 = mesh.mass(lumped).triplets().map(|(_, _, v)| v).sum();
            assert_relative_eq!(total, 3.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn gradient_exact_on_affine() {
        let mesh = build_interval_mesh(5, [0.0, 1.0]).unwrap();
        let u: Vec<f64> = mesh.nodes.iter().map(|&x| 2.0 * x + 1.0).collect();
        for v in mesh.cell_gradient().matvec(&u) {
            assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(build_interval_mesh(0, [0.0, 1.0]).is_err());
        assert!(build_interval_mesh(3, [1.0, 1.0]).is_err());
    }
}
