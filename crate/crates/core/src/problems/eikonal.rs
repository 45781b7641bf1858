//! The eikonal equation |∇u| = 1, u = 0 on the boundary, computed as the
//! maximizer of ∫u over the gradient-constrained set |∇u| ≤ 1.
//!
//! Saddle structure: (ψ, ∇v) = α_k(1, v) + (ψ^{k−1}, ∇v) paired with the
//! per-cell identity ∇u = ψ/√(1 + |ψ|²). The limit is the distance to the
//! boundary (the viscosity solution).

use crate::discretize::{build_interval_mesh, build_tri_mesh, P1Operators, SparseMatrix, TripletBuilder};
use crate::entropy::{ball_map, ball_map_jacobian, ball_margin};
use crate::error::Result;
use crate::lvpp::{LvppConfig, SaddleProblem};
use crate::schedule::AlphaSchedule;
use crate::solvers::NewtonConfig;

/// State layout: `[u interior nodes | per-cell ψ components]`.
pub struct EikonalProblem {
    mass_int: SparseMatrix,
    grad_int: Vec<SparseMatrix>,
    cell_areas: Vec<f64>,
    load_int: Vec<f64>,
    n_int: usize,
    n_cells: usize,
    space_dim: usize,
}

/// Unit-speed eikonal problem on a box, `n` cells per axis.
pub fn build_eikonal(n: usize, bbox: [f64; 4]) -> Result<EikonalProblem> {
    let mesh = build_tri_mesh(n, bbox)?;
    EikonalProblem::from_operators(&P1Operators::from_tri_mesh(&mesh)?)
}

/// One-dimensional analogue on an interval; the solution tends to the tent
/// function min(x − a, b − x).
pub fn build_eikonal_1d(n: usize, interval: [f64; 2]) -> Result<EikonalProblem> {
    let mesh = build_interval_mesh(n, interval)?;
    EikonalProblem::from_operators(&P1Operators::from_interval_mesh(&mesh)?)
}

/// The schedule used for every eikonal run: α_k = 10·min(2ᵏ, 5), realized as
/// capped geometric growth. The inner solves follow the published damped
/// continuation pattern (two Newton steps per subproblem against an h-scaled
/// residual tolerance); the outer stop sits slightly below the published
/// 1e−4 so the O(h) discretization error dominates the proximal error at
/// desk resolutions.
pub fn eikonal_config(h: f64) -> LvppConfig {
    LvppConfig {
        schedule: AlphaSchedule::capped_geometric(20.0, 2.0, 50.0).unwrap(),
        outer_tol: 5e-5,
        max_outer: 30,
        newton: NewtonConfig {
            tol: 1e-4 * h,
            max_iter: 2,
            ..Default::default()
        },
        strict_newton: false,
    }
}

impl EikonalProblem {
    fn from_operators(ops: &P1Operators) -> Result<Self> {
        let interior = ops.interior_nodes();
        let all_cells: Vec<usize> = (0..ops.num_cells()).collect();
        let load_full = ops.load(|_| 1.0);
        Ok(EikonalProblem {
            mass_int: ops.mass.restrict(&interior, &interior),
            grad_int: ops
                .grad_ops
                .iter()
                .map(|g| g.restrict(&all_cells, &interior))
                .collect(),
            cell_areas: ops.cell_areas.clone(),
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

    fn psi_cell<'a>(&self, state: &'a [f64], c: usize) -> &'a [f64] {
        let off = self.n_int + self.space_dim * c;
        &state[off..off + self.space_dim]
    }
}

impl SaddleProblem for EikonalProblem {
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
        // α-normalized form ((ψ − ψ^{k−1})/α, ∇v) = (1, v); keeps the two row
        // groups on a common scale for the damping merit function
        for i in 0..self.n_int {
            r[i] = -self.load_int[i];
        }
        for (dir, g) in self.grad_int.iter().enumerate() {
            for (c, i, gv) in g.triplets() {
                let dpsi = state[self.n_int + d * c + dir] - psi_prev[d * c + dir];
                r[i] += self.cell_areas[c] * gv * dpsi / alpha;
            }
        }
        let grads: Vec<Vec<f64>> = self.grad_int.iter().map(|g| g.matvec(u)).collect();
        for c in 0..self.n_cells {
            let mapped = ball_map(1.0, self.psi_cell(state, c));
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
        for (dir, g) in self.grad_int.iter().enumerate() {
            for (c, i, gv) in g.triplets() {
                let w = self.cell_areas[c] * gv;
                b.push(i, self.n_int + d * c + dir, w / alpha);
                b.push(self.n_int + d * c + dir, i, w);
            }
        }
        for c in 0..self.n_cells {
            let jac = ball_map_jacobian(1.0, self.psi_cell(state, c));
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

    fn latent_recovery(&self, state: &[f64]) -> Vec<f64> {
        let d = self.space_dim;
        let mut out = vec![0.0; d * self.n_cells];
        for c in 0..self.n_cells {
            let mapped = ball_map(1.0, self.psi_cell(state, c));
            out[d * c..d * c + d].copy_from_slice(&mapped);
        }
        out
    }

    fn feasibility_margin(&self, state: &[f64]) -> f64 {
        (0..self.n_cells)
            .map(|c| ball_margin(1.0, self.psi_cell(state, c)))
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

    #[test]
    fn interval_tends_to_the_tent_function() {
        let p = build_eikonal_1d(64, [0.0, 1.0]).unwrap();
        let (state, trace) = run_lvpp(&p, &eikonal_config(1.0 / 64.0)).unwrap();
        assert!(trace.converged);
        assert!(trace.outer_iterations() < 10);
        let u = p.primal(&state);
        let max = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        assert!((max - 0.5).abs() < 0.02, "max u = {max}");
        // compare nodal values to min(x, 1-x)
        let h = 1.0 / 64.0;
        for (i, &v) in u.iter().enumerate() {
            let x = (i + 1) as f64 * h;
            let tent = x.min(1.0 - x);
            assert!((v - tent).abs() < 0.05, "u({x}) = {v}, tent = {tent}");
        }
    }

    #[test]
    fn latent_gradient_strictly_inside_unit_ball() {
        let p = build_eikonal(12, [0.0, 1.0, 0.0, 1.0]).unwrap();
        let (state, trace) = run_lvpp(&p, &eikonal_config(1.0 / 12.0)).unwrap();
        assert!(trace.converged);
        assert!(p.feasibility_margin(&state) > 0.0);
        assert!(trace.min_margin_over_run() > 0.0);
    }
}
