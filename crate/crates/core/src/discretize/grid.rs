//! Structured 2D grid and the five-point-stencil Laplacian.

use crate::discretize::SparseMatrix;
use crate::entropy::Point;
use crate::error::{Error, Result};

/// Uniform tensor grid of interior points on a rectangle, with homogeneous
/// node indexing `idx = iy * nx + ix` (interior-lexicographic).
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

/// Uniform grid with `n` interior points per axis on the given box.
pub fn build_grid2d(n: usize, bbox: [f64; 4]) -> Result<Grid2D> {
    build_grid2d_rect(n, n, bbox)
}

pub fn build_grid2d_rect(nx: usize, ny: usize, bbox: [f64; 4]) -> Result<Grid2D> {
    let [x_min, x_max, y_min, y_max] = bbox;
    if nx < 1 || ny < 1 {
        return Err(Error::invalid("grid needs at least one interior point per axis"));
    }
    if x_max <= x_min || y_max <= y_min {
        return Err(Error::invalid("grid bounding box is empty"));
    }
    Ok(Grid2D {
        nx,
        ny,
        hx: (x_max - x_min) / (nx as f64 + 1.0),
        hy: (y_max - y_min) / (ny as f64 + 1.0),
        x_min,
        x_max,
        y_min,
        y_max,
    })
}

impl Grid2D {
    pub fn num_interior(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Coordinates of interior node `idx`.
    pub fn coords(&self, idx: usize) -> Point {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        [
            self.x_min + (ix as f64 + 1.0) * self.hx,
            self.y_min + (iy as f64 + 1.0) * self.hy,
        ]
    }
}

/// Matrix of −Δ with homogeneous Dirichlet boundary eliminated: five-point
/// stencil, symmetric positive definite.
pub fn fd_laplacian(grid: &Grid2D) -> SparseMatrix {
    let (nx, ny) = (grid.nx, grid.ny);
    let (cx, cy) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut trips = Vec::with_capacity(5 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let i = grid.index(ix, iy);
            trips.push((i, i, 2.0 * cx + 2.0 * cy));
            if ix > 0 {
                trips.push((i, grid.index(ix - 1, iy), -cx));
            }
            if ix + 1 < nx {
                trips.push((i, grid.index(ix + 1, iy), -cx));
            }
            if iy > 0 {
                trips.push((i, grid.index(ix, iy - 1), -cy));
            }
            if iy + 1 < ny {
                trips.push((i, grid.index(ix, iy + 1), -cy));
            }
        }
    }
    SparseMatrix::from_triplets(nx * ny, nx * ny, &trips).expect("stencil indices are in range")
}

/// Dirichlet lifting: contribution of boundary values `g` to the right-hand
/// side of `fd_laplacian(grid) u = rhs` at boundary-adjacent interior nodes.
pub fn fd_boundary_rhs(grid: &Grid2D, g: impl Fn(Point) -> f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let (cx, cy) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    let mut rhs = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let i = grid.index(ix, iy);
            let [x, y] = grid.coords(i);
            if ix == 0 {
                rhs[i] += cx * g([grid.x_min, y]);
            }
            if ix + 1 == nx {
                rhs[i] += cx * g([grid.x_max, y]);
            }
            if iy == 0 {
                rhs[i] += cy * g([x, grid.y_min]);
            }
            if iy + 1 == ny {
                rhs[i] += cy * g([x, grid.y_max]);
            }
        }
    }
    rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_point_grid_matrix() {
        let grid = build_grid2d(1, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(grid.hx, 0.5);
        let a = fd_laplacian(&grid);
        assert_eq!(a.nrows(), 1);
        assert_relative_eq!(a.get(0, 0), 16.0);
    }

    #[test]
    fn spacing_convention() {
        let grid = build_grid2d(3, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(grid.hx, 0.25);
        assert_relative_eq!(grid.coords(0)[0], 0.25);
        assert_relative_eq!(grid.coords(grid.num_interior() - 1)[1], 0.75);
    }

    #[test]
    fn laplacian_is_exactly_symmetric() {
        let grid = build_grid2d(4, [-1.0, 1.0, -1.0, 1.0]).unwrap();
        let a = fd_laplacian(&grid);
        let at = a.transpose();
        for (t1, t2) in a.triplets().zip(at.triplets()) {
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn smallest_eigenvalue_matches_closed_form() {
        // nx = ny = 2, h = 1/3: per-axis minimum eigenvalue (2 − 2cos(πh·3/3·...))
        // for the n-point 1D stencil is (2 − 2 cos(kπ/(n+1)))/h², k = 1.
        let grid = build_grid2d(2, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let a = fd_laplacian(&grid);
        let expected = 2.0 * (2.0 - 2.0 * (std::f64::consts::PI / 3.0).cos()) / (grid.hx * grid.hx);
        assert_relative_eq!(expected, 18.0, max_relative = 1e-14);
        // power iteration on (cI - A) to get the smallest eigenvalue of A
        let n = a.nrows();
        let c = 8.0 / (grid.hx * grid.hx); // upper bound on the spectrum
        let mut v = vec![1.0; n];
        for _ in 0..500 {
            let av = a.matvec(&v);
            let mut w: Vec<f64> = v.iter().zip(av.iter()).map(|(&vi, &ai)| c * vi - ai).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut w {
                *x /= norm;
            }
            v = w;
        }
        let av = a.matvec(&v);
        let lambda: f64 = v.iter().zip(av.iter()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lambda, 18.0, max_relative = 1e-10);
    }

    #[test]
    fn boundary_rhs_only_touches_adjacent_nodes() {
        let grid = build_grid2d(3, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let rhs = fd_boundary_rhs(&grid, |_| 1.0);
        // the center node (1,1) has no boundary neighbor
        assert_eq!(rhs[grid.index(1, 1)], 0.0);
        // a corner interior node touches two boundary edges
        assert_relative_eq!(rhs[grid.index(0, 0)], 2.0 * 16.0);
    }

    #[test]
    fn invalid_grid_rejected() {
        assert!(build_grid2d(0, [0.0, 1.0, 0.0, 1.0]).is_err());
        assert!(build_grid2d(3, [1.0, 0.0, 0.0, 1.0]).is_err());
    }
}
