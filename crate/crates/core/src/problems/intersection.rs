//! Intersection of an obstacle constraint and a gradient-norm constraint on
//! the unit interval: two latent fields, one nodal (Shannon) and one
//! per-cell (Hellinger), added the way independent multipliers would be.

use crate::discretize::{build_interval_mesh, IntervalMesh, SparseMatrix, TripletBuilder};
use crate::entropy::{ball_margin, exp_clamped};
use crate::error::{Error, Result};
use crate::lvpp::{LvppConfig, SaddleProblem};
use crate::schedule::AlphaSchedule;
use crate::solvers::NewtonConfig;

#[derive(Debug, Clone)]
pub struct IntersectionData {
    /// Elements on (0, 1).
    pub n: usize,
    /// Gradient cap on [0, 0.2] ∪ [0.8, 1]; elsewhere the cap is 100.
    pub phi_c: f64,
}

impl IntersectionData {
    pub fn preset(n: usize, phi_c: f64) -> Self {
        IntersectionData { n, phi_c }
    }
}

/// Compactly supported bump obstacle, normalized so φ₀(0.5) = 1.
pub fn bump_obstacle(x: f64) -> f64 {
    if x > 0.2 && x < 0.8 {
        let c = (1.0f64 / 0.9).exp();
        c * (-1.0 / (10.0 * (x - 0.2) * (0.8 - x))).exp()
    } else {
        0.0
    }
}

fn gradient_cap(phi_c: f64, x: f64) -> f64 {
    if x <= 0.2 || x >= 0.8 {
        phi_c
    } else {
        100.0
    }
}

pub fn intersection_config() -> LvppConfig {
    LvppConfig {
        schedule: AlphaSchedule::capped_geometric(1.0, 2.0, 1e8).unwrap(),
        outer_tol: 1e-9,
        max_outer: 80,
        newton: NewtonConfig::default(),
        strict_newton: true,
    }
}

/// State layout: `[u interior | ψ₀ interior (obstacle) | ψ per cell (slope)]`.
pub struct IntersectionProblem {
    stiffness_int: SparseMatrix,
    grad_int: SparseMatrix,
    lumped_int: Vec<f64>,
    cell_len: Vec<f64>,
    phi0_node: Vec<f64>,
    phi_cell: Vec<f64>,
    n_int: usize,
    n_cells: usize,
}

pub fn build_intersection(data: &IntersectionData) -> Result<IntersectionProblem> {
    if data.phi_c <= 0.0 {
        return Err(Error::build(format!(
            "slope cap phi_c = {} must be positive",
            data.phi_c
        )));
    }
    let mesh = build_interval_mesh(data.n, [0.0, 1.0])?;
    let interior = mesh.interior_nodes();
    let all_cells: Vec<usize> = (0..mesh.num_cells()).collect();
    let stiffness = mesh.stiffness();
    let lumped = mesh.mass(true).row_sums();
    Ok(IntersectionProblem {
        stiffness_int: stiffness.restrict(&interior, &interior),
        grad_int: mesh.cell_gradient().restrict(&all_cells, &interior),
        lumped_int: interior.iter().map(|&i| lumped[i]).collect(),
        cell_len: vec![mesh.h; mesh.num_cells()],
        phi0_node: interior.iter().map(|&i| bump_obstacle(mesh.nodes[i])).collect(),
        phi_cell: (0..mesh.num_cells())
            .map(|c| gradient_cap(data.phi_c, mesh.cell_midpoint(c)[0]))
            .collect(),
        n_int: interior.len(),
        n_cells: mesh.num_cells(),
    })
}

impl IntersectionProblem {
    pub fn primal(&self, state: &[f64]) -> Vec<f64> {
        state[..self.n_int].to_vec()
    }

    /// Obstacle-conforming nodal recovery φ₀ + exp(ψ₀).
    pub fn nodal_recovery(&self, state: &[f64]) -> Vec<f64> {
        (0..self.n_int)
            .map(|i| self.phi0_node[i] + exp_clamped(state[self.n_int + i]))
            .collect()
    }

    /// Slope-conforming per-cell recovery φψ/√(1 + ψ²).
    pub fn cell_recovery(&self, state: &[f64]) -> Vec<f64> {
        (0..self.n_cells)
            .map(|c| {
                let psi = state[2 * self.n_int + c];
                self.phi_cell[c] * psi / (1.0 + psi * psi).sqrt()
            })
            .collect()
    }

    /// Nodal value of the recovery at a given interior node fraction, for
    /// sweep comparisons (e.g. u at x = 0.2).
    pub fn value_at(&self, state: &[f64], x: f64, mesh_n: usize) -> f64 {
        let idx = ((x * mesh_n as f64).round() as usize).saturating_sub(1);
        self.nodal_recovery(state)[idx.min(self.n_int - 1)]
    }

    pub fn mesh_for(data: &IntersectionData) -> Result<IntervalMesh> {
        build_interval_mesh(data.n, [0.0, 1.0])
    }
}

impl SaddleProblem for IntersectionProblem {
    fn dim(&self) -> usize {
        2 * self.n_int + self.n_cells
    }

    fn latent_dim(&self) -> usize {
        self.n_int + self.n_cells
    }

    fn residual(&self, state: &[f64], alpha: f64, psi_prev: &[f64]) -> Vec<f64> {
        let (u, rest) = state.split_at(self.n_int);
        let (psi0, psi) = rest.split_at(self.n_int);
        let (psi0_prev, psi_prev_cell) = psi_prev.split_at(self.n_int);
        let mut r = vec![0.0; self.dim()];
        let ku = self.stiffness_int.matvec(u);
        for i in 0..self.n_int {
            r[i] = alpha * ku[i] + self.lumped_int[i] * (psi0[i] - psi0_prev[i]);
        }
        for (c, i, gv) in self.grad_int.triplets() {
            r[i] += self.cell_len[c] * gv * (psi[c] - psi_prev_cell[c]);
        }
        for i in 0..self.n_int {
            r[self.n_int + i] =
                self.lumped_int[i] * (u[i] - self.phi0_node[i] - exp_clamped(psi0[i]));
        }
        let gu = self.grad_int.matvec(u);
        for c in 0..self.n_cells {
            let mapped = self.phi_cell[c] * psi[c] / (1.0 + psi[c] * psi[c]).sqrt();
            r[2 * self.n_int + c] = self.cell_len[c] * (gu[c] - mapped);
        }
        r
    }

    fn jacobian(&self, state: &[f64], alpha: f64) -> SparseMatrix {
        let psi0 = &state[self.n_int..2 * self.n_int];
        let psi = &state[2 * self.n_int..];
        let mut b = TripletBuilder::new();
        b.add_block(0, 0, &self.stiffness_int, alpha);
        b.add_diag(0, self.n_int, &self.lumped_int);
        for (c, i, gv) in self.grad_int.triplets() {
            let w = self.cell_len[c] * gv;
            b.push(i, 2 * self.n_int + c, w);
            b.push(2 * self.n_int + c, i, w);
        }
        for i in 0..self.n_int {
            b.push(self.n_int + i, i, self.lumped_int[i]);
            b.push(
                self.n_int + i,
                self.n_int + i,
                -self.lumped_int[i] * exp_clamped(psi0[i]),
            );
        }
        for c in 0..self.n_cells {
            let d = (1.0 + psi[c] * psi[c]).powf(1.5);
            b.push(
                2 * self.n_int + c,
                2 * self.n_int + c,
                -self.cell_len[c] * self.phi_cell[c] / d,
            );
        }
        b.build(self.dim(), self.dim()).expect("indices in range")
    }

    fn latent_block(&self, state: &[f64]) -> Vec<f64> {
        state[self.n_int..].to_vec()
    }

    /// Concatenation of the nodal and per-cell recoveries.
    fn latent_recovery(&self, state: &[f64]) -> Vec<f64> {
        let mut out = self.nodal_recovery(state);
        out.extend(self.cell_recovery(state));
        out
    }

    fn feasibility_margin(&self, state: &[f64]) -> f64 {
        // by-construction gaps: exp(ψ₀) nodally, the stable ball margin per cell
        let node_margin = (0..self.n_int)
            .map(|i| exp_clamped(state[self.n_int + i]))
            .fold(f64::INFINITY, f64::min);
        let cell_margin = (0..self.n_cells)
            .map(|c| {
                ball_margin(
                    self.phi_cell[c],
                    std::slice::from_ref(&state[2 * self.n_int + c]),
                )
            })
            .fold(f64::INFINITY, f64::min);
        node_margin.min(cell_margin)
    }

    fn increment_norm(&self, state: &[f64], prev_state: &[f64]) -> f64 {
        state[..self.n_int]
            .iter()
            .zip(prev_state[..self.n_int].iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lvpp::run_lvpp;

    #[test]
    fn bump_is_normalized_and_supported() {
        assert!((bump_obstacle(0.5) - 1.0).abs() < 1e-14);
        assert_eq!(bump_obstacle(0.1), 0.0);
        assert_eq!(bump_obstacle(0.9), 0.0);
        assert!(bump_obstacle(0.4) > 0.0);
    }

    #[test]
    fn recovery_respects_both_constraints_strictly() {
        let p = build_intersection(&IntersectionData::preset(128, 3.0)).unwrap();
        let (state, trace) = run_lvpp(&p, &intersection_config()).unwrap();
        assert!(trace.converged);
        assert!(p.feasibility_margin(&state) > 0.0);
        let nodal = p.nodal_recovery(&state);
        for (i, &v) in nodal.iter().enumerate() {
            assert!(v >= p.phi0_node[i]);
        }
        let cells = p.cell_recovery(&state);
        for (c, &v) in cells.iter().enumerate() {
            assert!(v.abs() <= p.phi_cell[c]);
        }
        assert!(trace.min_margin_over_run() > 0.0);
    }

    #[test]
    fn nonpositive_cap_rejected() {
        assert!(build_intersection(&IntersectionData::preset(16, -1.0)).is_err());
    }
}
