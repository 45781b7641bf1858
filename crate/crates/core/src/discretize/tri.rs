//! Conforming P1 triangle meshes on rectangles and their element assembly.

use crate::discretize::SparseMatrix;
use crate::entropy::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// True exactly for vertices on the bounding-box boundary.
    pub boundary: Vec<bool>,
    pub areas: Vec<f64>,
}

/// Uniform right-triangle mesh: `n` squares per axis, each split along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_tri_mesh(n: usize, bbox: [f64; 4]) -> Result<TriMesh> {
    let [x_min, x_max, y_min, y_max] = bbox;
    if n < 1 {
        return Err(Error::invalid("mesh needs at least one cell per axis"));
    }
    if x_max <= x_min || y_max <= y_min {
        return Err(Error::invalid("mesh bounding box is empty"));
    }
    let hx = (x_max - x_min) / n as f64;
    let hy = (y_max - y_min) / n as f64;
    let nv = n + 1;
    let mut vertices = Vec::with_capacity(nv * nv);
    let mut boundary = Vec::with_capacity(nv * nv);
    for iy in 0..nv {
        for ix in 0..nv {
            vertices.push([x_min + ix as f64 * hx, y_min + iy as f64 * hy]);
            boundary.push(ix == 0 || iy == 0 || ix == n || iy == n);
        }
    }
    let vid = |ix: usize, iy: usize| iy * nv + ix;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            let (v00, v10) = (vid(ix, iy), vid(ix + 1, iy));
            let (v01, v11) = (vid(ix, iy + 1), vid(ix + 1, iy + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let areas = triangles
        .iter()
        .map(|t| signed_area(&vertices, t))
        .collect::<Vec<_>>();
    Ok(TriMesh {
        vertices,
        triangles,
        boundary,
        areas,
    })
}

fn signed_area(vertices: &[Point], t: &[usize; 3]) -> f64 {
    let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn cell_midpoint(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Hat-function gradients on triangle `t`; constant per element.
    fn shape_gradients(&self, t: usize) -> Result<[[f64; 2]; 3]> {
        let area = self.areas[t];
        if area <= 0.0 || !area.is_finite() {
            return Err(Error::Assembly(format!(
                "triangle {t} is degenerate (signed area {area})"
            )));
        }
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        let s = 1.0 / (2.0 * area);
        Ok([
            [s * (b[1] - c[1]), s * (c[0] - b[0])],
            [s * (c[1] - a[1]), s * (a[0] - c[0])],
            [s * (a[1] - b[1]), s * (b[0] - a[0])],
        ])
    }
}

/// P1 stiffness matrix: symmetric positive semidefinite with zero row sums
/// before boundary conditions.
pub fn assemble_p1_stiffness(mesh: &TriMesh) -> Result<SparseMatrix> {
    let mut trips = Vec::with_capacity(9 * mesh.num_cells());
    for t in 0..mesh.num_cells() {
        let grads = mesh.shape_gradients(t)?;
        let verts = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let k = mesh.areas[t] * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                trips.push((verts[i], verts[j], k));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &trips)
}

/// Consistent P1 mass matrix (element matrix area/12·[[2,1,1],[1,2,1],[1,1,2]])
/// or its row-sum-lumped diagonal.
pub fn assemble_p1_mass(mesh: &TriMesh, lumped: bool) -> Result<SparseMatrix> {
    let mut trips = Vec::new();
    for t in 0..mesh.num_cells() {
        let area = mesh.areas[t];
        if area <= 0.0 || !area.is_finite() {
            return Err(Error::Assembly(format!(
                "triangle {t} is degenerate (signed area {area})"
            )));
        }
        let verts = mesh.triangles[t];
        if lumped {
            for &v in &verts {
                trips.push((v, v, area / 3.0));
            }
        } else {
            for i in 0..3 {
                for j in 0..3 {
                    let m = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                    trips.push((verts[i], verts[j], m));
                }
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), mesh.num_vertices(), &trips)
}

/// Operators mapping nodal values to the constant per-triangle gradient
/// components; exact for affine fields.
pub fn p1_cell_gradient_operator(mesh: &TriMesh) -> Result<(SparseMatrix, SparseMatrix)> {
    let mut gx = Vec::with_capacity(3 * mesh.num_cells());
    let mut gy = Vec::with_capacity(3 * mesh.num_cells());
    for t in 0..mesh.num_cells() {
        let grads = mesh.shape_gradients(t)?;
        let verts = mesh.triangles[t];
        for i in 0..3 {
            gx.push((t, verts[i], grads[i][0]));
            gy.push((t, verts[i], grads[i][1]));
        }
    }
    Ok((
        SparseMatrix::from_triplets(mesh.num_cells(), mesh.num_vertices(), &gx)?,
        SparseMatrix::from_triplets(mesh.num_cells(), mesh.num_vertices(), &gy)?,
    ))
}

/// Load vector by vertex quadrature: f at vertices, weight area/3 per
/// incident triangle.
pub fn assemble_load(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_vertices()];
    for t in 0..mesh.num_cells() {
        for &v in &mesh.triangles[t] {
            load[v] += mesh.areas[t] / 3.0 * f(mesh.vertices[v]);
        }
    }
    load
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square(n: usize) -> TriMesh {
        build_tri_mesh(n, [0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn two_triangle_mesh_shape() {
        let mesh = unit_square(1);
        assert_eq!(mesh.num_vertices(), 4);
        assert_eq!(mesh.num_cells(), 2);
        assert!(mesh.areas.iter().all(|&a| (a - 0.5).abs() < 1e-15));
        assert!(mesh.boundary.iter().all(|&b| b));
    }

    #[test]
    fn stiffness_two_triangle_hand_assembly() {
        // On the 2-element unit square every assembled diagonal entry is 1:
        // the two right-angle corners contribute a full 1 each, the two
        // diagonal corners accumulate 1/2 from each incident element.
        let mesh = unit_square(1);
        let k = assemble_p1_stiffness(&mesh).unwrap();
        for i in 0..4 {
            assert_relative_eq!(k.get(i, i), 1.0, max_relative = 1e-14);
        }
        // the diagonal pair has orthogonal hat gradients in both elements
        assert_relative_eq!(k.get(0, 3), 0.0);
        // edges along the legs carry -1/2
        assert_relative_eq!(k.get(0, 1), -0.5, max_relative = 1e-14);
        assert_relative_eq!(k.get(1, 3), -0.5, max_relative = 1e-14);
    }

    #[test]
    fn stiffness_row_sums_vanish() {
        let mesh = unit_square(4);
        let k = assemble_p1_stiffness(&mesh).unwrap();
        for s in k.row_sums() {
            assert!(s.abs() < 1e-14, "row sum {s}");
        }
    }

    #[test]
    fn stiffness_scale_invariant_in_2d() {
        let coarse = assemble_p1_stiffness(&unit_square(3)).unwrap();
        let scaled_mesh = build_tri_mesh(3, [0.0, 7.0, 0.0, 7.0]).unwrap();
        let scaled = assemble_p1_stiffness(&scaled_mesh).unwrap();
        for (a, b) in coarse.triplets().zip(scaled.triplets()) {
            assert_eq!(a.0, b.0);
            assert_eq!(a.1, b.1);
            assert_relative_eq!(a.2, b.2, max_relative = 1e-12);
        }
    }

    #[test]
    fn mass_total_is_domain_area() {
        let mesh = unit_square(5);
        for lumped in [false, true] {
            let m = assemble_p1_mass(&mesh, lumped).unwrap();
            let total: f64 = m.triplets().map(|(_, _, v)| v).sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn lumped_mass_is_row_sums_and_positive() {
        let mesh = unit_square(3);
        let consistent = assemble_p1_mass(&mesh, false).unwrap();
        let lumped = assemble_p1_mass(&mesh, true).unwrap();
        let sums = consistent.row_sums();
        for i in 0..mesh.num_vertices() {
            assert!(lumped.get(i, i) > 0.0);
            assert_relative_eq!(lumped.get(i, i), sums[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn cell_gradients_exact_on_affine_fields() {
        let mesh = unit_square(4);
        let (gx, gy) = p1_cell_gradient_operator(&mesh).unwrap();
        let ux: Vec<f64> = mesh.vertices.iter().map(|p| p[0]).collect();
        let uy: Vec<f64> = mesh.vertices.iter().map(|p| p[1]).collect();
        let uc = vec![3.0; mesh.num_vertices()];
        for v in gx.matvec(&ux) {
            assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        }
        for v in gy.matvec(&ux) {
            assert!(v.abs() < 1e-13);
        }
        for v in gy.matvec(&uy) {
            assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        }
        for v in gx.matvec(&uc).iter().chain(gy.matvec(&uc).iter()) {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn load_vector_quadrature() {
        let mesh = unit_square(1);
        let load = assemble_load(&mesh, |_| 1.0);
        let total: f64 = load.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        // each entry is (total incident area)/3
        assert_relative_eq!(load[0], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(load[1], 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(load[3], 1.0 / 3.0, max_relative = 1e-14);
        let zero = assemble_load(&mesh, |_| 0.0);
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degenerate_triangle_reported_by_index() {
        let mut mesh = unit_square(1);
        mesh.vertices[3] = mesh.vertices[0];
        mesh.areas = mesh
            .triangles
            .iter()
            .map(|t| signed_area(&mesh.vertices, t))
            .collect();
        let err = assemble_p1_stiffness(&mesh).unwrap_err();
        assert!(err.to_string().contains("triangle"), "{err}");
    }
}
