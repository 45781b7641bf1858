//! Dirichlet energy minimization under the pointwise gradient bound
//! |∇u| ≤ φ, discretized with P1 nodal u and per-cell (DG0) latent vectors.
//!
//! Saddle structure: α_k(∇u, ∇v) + (ψ, ∇v) = α_k(f, v) + (ψ^{k−1}, ∇v) and
//! the per-cell identity ∇u = φψ/√(1 + |ψ|²), which is exact because every
//! factor is elementwise constant.

use std::sync::Arc;

use crate::discretize::{build_tri_mesh, P1Operators, SparseMatrix, TripletBuilder};
use crate::entropy::{ball_map, ball_map_jacobian, ball_margin, Point};
use crate::error::{Error, Result};
use crate::lvpp::{LvppConfig, SaddleProblem};
use crate::schedule::AlphaSchedule;
use crate::solvers::NewtonConfig;

pub type SpatialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct GradientData {
    pub bbox: [f64; 4],
    pub force: SpatialFn,
    /// Gradient bound φ; must be uniformly positive.
    pub bound: SpatialFn,
    /// Cells per axis.
    pub n: usize,
}

impl GradientData {
    /// The published data set: f = 15 sin²(πx₁), φ = 0.1 + 0.2x₁ + 0.4x₂ on
    /// the unit square.
    pub fn paper(n: usize) -> Self {
        GradientData {
            bbox: [0.0, 1.0, 0.0, 1.0],
            force: Arc::new(|p| 15.0 * (std::f64::consts::PI * p[0]).sin().powi(2)),
            bound: Arc::new(|p| 0.1 + 0.2 * p[0] + 0.4 * p[1]),
            n,
        }
    }
}

/// α₁ = 1 doubling, L² increment stop at 1e−8.
pub fn gradient_paper_config() -> LvppConfig {
    LvppConfig {
        schedule: AlphaSchedule::capped_geometric(1.0, 2.0, 1e30).unwrap(),
        outer_tol: 1e-8,
        max_outer: 60,
        newton: NewtonConfig::default(),
        strict_newton: true,
    }
}

/// State layout: `[u interior nodes | per-cell (ψx, ψy) pairs]`.
pub struct GradientProblem {
    stiffness_int: SparseMatrix,
    mass_int: SparseMatrix,
    /// Cell-gradient operators restricted to interior columns.
    grad_int: Vec<SparseMatrix>,
    cell_areas: Vec<f64>,
    phi_cell: Vec<f64>,
    load_int: Vec<f64>,
    n_int: usize,
    n_cells: usize,
    space_dim: usize,
}

pub fn build_gradient_constraint(data: &GradientData) -> Result<GradientProblem> {
    let mesh = build_tri_mesh(data.n, data.bbox)?;
    let ops = P1Operators::from_tri_mesh(&mesh)?;
    GradientProblem::from_operators(&ops, &data.force, &data.bound)
}

impl GradientProblem {
    pub(crate) fn from_operators(
        ops: &P1Operators,
        force: &SpatialFn,
        bound: &SpatialFn,
    ) -> Result<Self> {
        let interior = ops.interior_nodes();
        let phi_cell: Vec<f64> = ops.cell_midpoints.iter().map(|&p| bound(p)).collect();
        if let Some((c, &phi)) = phi_cell.iter().enumerate().find(|(_, &phi)| phi <= 0.0) {
            return Err(Error::build(format!(
                "gradient bound must be positive; phi = {phi} on cell {c}"
            )));
        }
        let load_full = ops.load(|p| force(p));
        Ok(GradientProblem {
            stiffness_int: ops.stiffness.restrict(&interior, &interior),
            mass_int: ops.mass.restrict(&interior, &interior),
            grad_int: ops
                .grad_ops
                .iter()
                .map(|g| g.restrict(&(0..ops.num_cells()).collect::<Vec<_>>(), &interior))
                .collect(),
            cell_areas: ops.cell_areas.clone(),
            phi_cell,
            load_int: interior.iter().map(|&i| load_full[i]).collect(),
            n_int: interior.len(),
            n_cells: ops.num_cells(),
            space_dim: ops.space_dim(),
        })
    }

    pub fn primal(&self, state: &[f64]) -> Vec<f64> {
        state[..self.n_int].to_vec()
    }

    pub fn num_interior(&self) -> usize {
        self.n_int
    }

    pub fn num_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_bound(&self, c: usize) -> f64 {
        self.phi_cell[c]
    }

    fn psi_cell<'a>(&self, state: &'a [f64], c: usize) -> &'a [f64] {
        let off = self.n_int + self.space_dim * c;
        &state[off..off + self.space_dim]
    }

    /// Per-cell norm of the recovered (feasible) gradient.
    pub fn recovered_gradient_norms(&self, state: &[f64]) -> Vec<f64> {
        (0..self.n_cells)
            .map(|c| {
                let v = ball_map(self.phi_cell[c], self.psi_cell(state, c));
                v.iter().map(|t| t * t).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// ½(∇u,∇u) − (f,u) on the primal block.
    pub fn energy(&self, state: &[f64]) -> f64 {
        let u = &state[..self.n_int];
        let ku = self.stiffness_int.matvec(u);
        let quad: f64 = u.iter().zip(ku.iter()).map(|(a, b)| a * b).sum();
        let lin: f64 = u.iter().zip(self.load_int.iter()).map(|(a, b)| a * b).sum();
        0.5 * quad - lin
    }
}

impl SaddleProblem for GradientProblem {
    fn dim(&self) -> usize {
        self.n_int + self.space_dim * self.n_cells
    }

    fn latent_dim(&self) -> usize {
        self.space_dim * self.n_cells
    }

    fn residual(&self, state: &[f64], alpha: f64, psi_prev: &[f64]) -> Vec<f64> {
        let d = self.space_dim;
        let u = &state[..self.n_int];
        let mut r = vec![0.0; self.dim()];
        let ku = self.stiffness_int.matvec(u);
        for i in 0..self.n_int {
            r[i] = alpha * (ku[i] - self.load_int[i]);
        }
        // (ψ − ψ^{k−1}, ∇v) accumulated through the cell-gradient transpose
        for (dir, g) in self.grad_int.iter().enumerate() {
            for (c, i, gv) in g.triplets() {
                let dpsi = state[self.n_int + d * c + dir] - psi_prev[d * c + dir];
                r[i] += self.cell_areas[c] * gv * dpsi;
            }
        }
        // area-weighted per-cell latent identity ∇u = φψ/√(1+|ψ|²)
        let grads: Vec<Vec<f64>> = self.grad_int.iter().map(|g| g.matvec(u)).collect();
        for c in 0..self.n_cells {
            let mapped = ball_map(self.phi_cell[c], self.psi_cell(state, c));
            for dir in 0..d {
                r[self.n_int + d * c + dir] =
                    self.cell_areas[c] * (grads[dir][c] - mapped[dir]);
            }
        }
        r
    }

    fn jacobian(&self, state: &[f64], alpha: f64) -> SparseMatrix {
        let d = self.space_dim;
        let mut b = TripletBuilder::new();
        b.add_block(0, 0, &self.stiffness_int, alpha);
        for (dir, g) in self.grad_int.iter().enumerate() {
            for (c, i, gv) in g.triplets() {
                let w = self.cell_areas[c] * gv;
                b.push(i, self.n_int + d * c + dir, w);
                b.push(self.n_int + d * c + dir, i, w);
            }
        }
        for c in 0..self.n_cells {
            let jac = ball_map_jacobian(self.phi_cell[c], self.psi_cell(state, c));
            let off = self.n_int + d * c;
            for p in 0..d {
                for q in 0..d {
                    b.push(off + p, off + q, -self.cell_areas[c] * jac[p * d + q]);
                }
            }
        }
        b.build(self.dim(), self.dim()).expect("indices in range")
    }

    fn latent_block(&self, state: &[f64]) -> Vec<f64> {
        state[self.n_int..].to_vec()
    }

    /// Per-cell recovered gradient components, cell-major.
    fn latent_recovery(&self, state: &[f64]) -> Vec<f64> {
        let d = self.space_dim;
        let mut out = vec![0.0; d * self.n_cells];
        for c in 0..self.n_cells {
            let mapped = ball_map(self.phi_cell[c], self.psi_cell(state, c));
            out[d * c..d * c + d].copy_from_slice(&mapped);
        }
        out
    }

    fn feasibility_margin(&self, state: &[f64]) -> f64 {
        (0..self.n_cells)
            .map(|c| ball_margin(self.phi_cell[c], self.psi_cell(state, c)))
            .fold(f64::INFINITY, f64::min)
    }

    fn increment_norm(&self, state: &[f64], prev_state: &[f64]) -> f64 {
        let du: Vec<f64> = state[..self.n_int]
            .iter()
            .zip(prev_state[..self.n_int].iter())
            .map(|(a, b)| a - b)
            .collect();
        self.mass_int.quadratic_form(&du, &du).max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lvpp::run_lvpp;
    use crate::solvers::solve_sparse;

    #[test]
    fn zero_force_gives_zero_fields() {
        let data = GradientData {
            bbox: [0.0, 1.0, 0.0, 1.0],
            force: Arc::new(|_| 0.0),
            bound: Arc::new(|_| 1.0),
            n: 8,
        };
        let p = build_gradient_constraint(&data).unwrap();
        let (state, trace) = run_lvpp(&p, &gradient_paper_config()).unwrap();
        assert!(trace.converged);
        assert!(state.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn inactive_bound_matches_unconstrained_poisson() {
        let data = GradientData {
            bbox: [0.0, 1.0, 0.0, 1.0],
            force: Arc::new(|_| 1.0),
            bound: Arc::new(|_| 100.0),
            n: 16,
        };
        let p = build_gradient_constraint(&data).unwrap();
        let (state, trace) = run_lvpp(&p, &gradient_paper_config()).unwrap();
        assert!(trace.converged);
        let u = p.primal(&state);
        // direct Poisson solve on the same interior operators
        let direct = solve_sparse(&p.stiffness_int, &p.load_int).unwrap();
        let err = u
            .iter()
            .zip(direct.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-7, "max deviation {err}");
    }

    #[test]
    fn nonpositive_bound_rejected() {
        let data = GradientData {
            bbox: [0.0, 1.0, 0.0, 1.0],
            force: Arc::new(|_| 1.0),
            bound: Arc::new(|p| p[0] - 0.5),
            n: 8,
        };
        assert!(build_gradient_constraint(&data).is_err());
    }

    #[test]
    fn paper_data_activates_the_bound_strictly_inside() {
        let p = build_gradient_constraint(&GradientData::paper(24)).unwrap();
        let (state, trace) = run_lvpp(&p, &gradient_paper_config()).unwrap();
        assert!(trace.converged);
        let norms = p.recovered_gradient_norms(&state);
        let mut active = 0usize;
        for (c, &n) in norms.iter().enumerate() {
            assert!(n < p.cell_bound(c), "cell {c}: |grad| = {n} >= {}", p.cell_bound(c));
            if n >= p.cell_bound(c) - 1e-8 {
                active += 1;
            }
        }
        assert!(active > 0, "no active cells for the published data");
    }
}
