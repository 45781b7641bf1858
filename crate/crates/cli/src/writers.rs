//! CSV and legacy-VTK writers. All floating-point output carries 17
//! significant digits so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use lvpp::discretize::{Grid2D, TriMesh};
use lvpp::entropy::Point;
use lvpp::lvpp::LvppTrace;
use lvpp::Result;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Nodal field as `x,y,value` rows in node order.
pub fn write_field_csv(path: &Path, coords: &[Point], values: &[f64]) -> Result<()> {
    assert_eq!(coords.len(), values.len(), "field length matches layout");
    let mut out = String::from("x,y,value\n");
    for (p, v) in coords.iter().zip(values.iter()) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-cell field as `cell,value` rows.
pub fn write_cell_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::from("cell,value\n");
    for (c, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{c},{}", fmt_f64(*v));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Trace rows in the outer-loop column schema.
pub fn write_trace_csv(path: &Path, trace: &LvppTrace) -> Result<()> {
    let mut out = String::from("k,alpha,newton_iters,linear_solves,increment_norm,min_margin\n");
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.alpha),
            r.newton_iters,
            r.linear_solves,
            fmt_f64(r.increment_norm),
            fmt_f64(r.min_margin)
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Structured-points legacy VTK for a grid field including the boundary ring.
pub fn write_vtk_grid(path: &Path, grid: &Grid2D, interior: &[f64], boundary: f64) -> Result<()> {
    let (nx, ny) = (grid.nx + 2, grid.ny + 2);
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("lvpp field\nASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {nx} {ny} 1");
    let _ = writeln!(out, "ORIGIN {} {} 0", fmt_f64(grid.x_min), fmt_f64(grid.y_min));
    let _ = writeln!(out, "SPACING {} {} 1", fmt_f64(grid.hx), fmt_f64(grid.hy));
    let _ = writeln!(out, "POINT_DATA {}", nx * ny);
    out.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for iy in 0..ny {
        for ix in 0..nx {
            let v = if ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny {
                boundary
            } else {
                interior[(iy - 1) * grid.nx + (ix - 1)]
            };
            let _ = writeln!(out, "{}", fmt_f64(v));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Unstructured-grid legacy VTK with triangle cells, one nodal scalar and
/// optionally one per-cell scalar.
pub fn write_vtk_tri(
    path: &Path,
    mesh: &TriMesh,
    point_scalars: &[f64],
    cell_scalars: Option<&[f64]>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("lvpp field\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.num_vertices());
    for p in &mesh.vertices {
        let _ = writeln!(out, "{} {} 0", fmt_f64(p[0]), fmt_f64(p[1]));
    }
    let _ = writeln!(out, "CELLS {} {}", mesh.num_cells(), 4 * mesh.num_cells());
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.num_cells());
    for _ in 0..mesh.num_cells() {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.num_vertices());
    out.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for v in point_scalars {
        let _ = writeln!(out, "{}", fmt_f64(*v));
    }
    if let Some(cells) = cell_scalars {
        let _ = writeln!(out, "CELL_DATA {}", mesh.num_cells());
        out.push_str("SCALARS latent double 1\nLOOKUP_TABLE default\n");
        for v in cells {
            let _ = writeln!(out, "{}", fmt_f64(*v));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
