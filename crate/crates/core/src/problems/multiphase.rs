//! Gibbs-simplex multiphase gradient flow: backward-Euler steps of an
//! H⁻¹-type flow for a Ginzburg–Landau energy, with the simplex constraint
//! enforced through the softmax latent map.
//!
//! Per time step the saddle system couples the phases u, the slack fields
//! z = ε²Δu − ∂W(u), and the latent fields ψ:
//!   α(z_i, y) + ε²α(∇u_i, ∇y) − 2α(u_i, y) + (ψ_i, y) = (ψ^{k−1}_i, y) − α(1, y),
//!   (u_i, v) − τ(∇z_i, ∇v) = (u_prev,i, v),
//!   u_i = softmax_i(ψ) nodally.

use std::sync::Arc;

use crate::discretize::{build_tri_mesh, P1Operators, SparseMatrix, TripletBuilder};
use crate::entropy::{softmax, Point};
use crate::error::{Error, Result};
use crate::lvpp::{run_lvpp, LvppConfig, LvppTrace, SaddleProblem};
use crate::schedule::AlphaSchedule;
use crate::solvers::NewtonConfig;

pub type InitialFn = Arc<dyn Fn(Point) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct MultiphaseData {
    /// Phase count m.
    pub m: usize,
    /// Diffuse interface parameter ε.
    pub epsilon: f64,
    /// Time step τ.
    pub tau: f64,
    /// Cells per axis on the unit square.
    pub n: usize,
    /// Number of backward-Euler steps to march.
    pub steps: usize,
    /// Initial phase fields; must land on the simplex at every node.
    pub initial: InitialFn,
}

impl MultiphaseData {
    /// Four phases arranged in mollified quadrant blocks, summing to one by
    /// construction of the logistic blend.
    pub fn quadrant_preset(n: usize, steps: usize) -> Self {
        let width = 0.05;
        MultiphaseData {
            m: 4,
            epsilon: 1.0 / 32.0,
            tau: 1e-5,
            n,
            steps,
            initial: Arc::new(move |p| quadrant_blend(p, width)),
        }
    }
}

/// Logistic quadrant indicator product; the four fields sum to one exactly
/// because σ(t) + σ(−t) = 1 factor by factor.
pub fn quadrant_blend(p: Point, width: f64) -> Vec<f64> {
    let s = |t: f64| 1.0 / (1.0 + (-t / width).exp());
    let (l, r) = (s(0.5 - p[0]), s(p[0] - 0.5));
    let (b, t) = (s(0.5 - p[1]), s(p[1] - 0.5));
    vec![l * b, r * b, l * t, r * t]
}

/// Constant α = 1 with a mass-weighted L² increment stop.
pub fn multiphase_step_config() -> LvppConfig {
    LvppConfig {
        schedule: AlphaSchedule::constant(1.0).unwrap(),
        outer_tol: 1e-5,
        max_outer: 30,
        newton: NewtonConfig {
            tol: 1e-10,
            ..Default::default()
        },
        strict_newton: true,
    }
}

/// One backward-Euler step as a saddle problem. State layout (phase-major):
/// `[u (m·N) | z (m·N) | ψ (m·N)]` over all N nodes (natural boundary).
pub struct MultiphaseStepProblem {
    stiffness: SparseMatrix,
    lumped: Vec<f64>,
    u_prev: Vec<f64>,
    m: usize,
    n_nodes: usize,
    epsilon: f64,
    tau: f64,
}

pub fn build_multiphase_step(data: &MultiphaseData, u_prev: &[f64]) -> Result<MultiphaseStepProblem> {
    let mesh = build_tri_mesh(data.n, [0.0, 1.0, 0.0, 1.0])?;
    let ops = P1Operators::from_tri_mesh(&mesh)?;
    build_step_from_operators(data, &ops, u_prev)
}

fn build_step_from_operators(
    data: &MultiphaseData,
    ops: &P1Operators,
    u_prev: &[f64],
) -> Result<MultiphaseStepProblem> {
    let n_nodes = ops.num_nodes();
    if data.m < 2 {
        return Err(Error::build("multiphase flow needs at least two phases"));
    }
    if u_prev.len() != data.m * n_nodes {
        return Err(Error::DimensionMismatch {
            expected: data.m * n_nodes,
            got: u_prev.len(),
        });
    }
    for j in 0..n_nodes {
        let mut sum = 0.0;
        for i in 0..data.m {
            let v = u_prev[i * n_nodes + j];
            if v < -1e-10 {
                return Err(Error::build(format!(
                    "previous phase field {i} is negative ({v}) at node {j}"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::build(format!(
                "previous phase fields sum to {sum} != 1 at node {j}"
            )));
        }
    }
    Ok(MultiphaseStepProblem {
        stiffness: ops.stiffness.clone(),
        lumped: ops.lumped_mass.clone(),
        u_prev: u_prev.to_vec(),
        m: data.m,
        n_nodes,
        epsilon: data.epsilon,
        tau: data.tau,
    })
}

impl MultiphaseStepProblem {
    pub fn num_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn phases(&self) -> usize {
        self.m
    }

    pub fn primal(&self, state: &[f64]) -> Vec<f64> {
        state[..self.m * self.n_nodes].to_vec()
    }

    /// Mass-weighted volume of each recovered phase.
    pub fn phase_masses(&self, recovery: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                (0..self.n_nodes)
                    .map(|j| self.lumped[j] * recovery[i * self.n_nodes + j])
                    .sum()
            })
            .collect()
    }

    fn psi_at_node(&self, state: &[f64], j: usize) -> Vec<f64> {
        let off = 2 * self.m * self.n_nodes;
        (0..self.m).map(|i| state[off + i * self.n_nodes + j]).collect()
    }
}

impl SaddleProblem for MultiphaseStepProblem {
    fn dim(&self) -> usize {
        3 * self.m * self.n_nodes
    }

    fn latent_dim(&self) -> usize {
        self.m * self.n_nodes
    }

    fn initial_state(&self) -> Vec<f64> {
        // warm Newton start: u at the previous step, ψ at the centered log of
        // u_prev (the latent preimage), z at zero
        let mn = self.m * self.n_nodes;
        let mut state = vec![0.0; 3 * mn];
        state[..mn].copy_from_slice(&self.u_prev);
        for j in 0..self.n_nodes {
            let logs: Vec<f64> = (0..self.m)
                .map(|i| self.u_prev[i * self.n_nodes + j].max(1e-300).ln())
                .collect();
            let mean = logs.iter().sum::<f64>() / self.m as f64;
            for i in 0..self.m {
                state[2 * mn + i * self.n_nodes + j] = logs[i] - mean;
            }
        }
        state
    }

    fn residual(&self, state: &[f64], alpha: f64, psi_prev: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n_nodes);
        let mn = m * n;
        let (u, rest) = state.split_at(mn);
        let (z, psi) = rest.split_at(mn);
        let mut r = vec![0.0; 3 * mn];
        for i in 0..m {
            let ui = &u[i * n..(i + 1) * n];
            let zi = &z[i * n..(i + 1) * n];
            let kui = self.stiffness.matvec(ui);
            let kzi = self.stiffness.matvec(zi);
            for j in 0..n {
                let d = self.lumped[j];
                let e2 = self.epsilon * self.epsilon;
                r[i * n + j] = alpha * d * zi[j] + e2 * alpha * kui[j] - 2.0 * alpha * d * ui[j]
                    + d * (psi[i * n + j] - psi_prev[i * n + j])
                    + alpha * d;
                r[mn + i * n + j] = d * ui[j] - self.tau * kzi[j] - d * self.u_prev[i * n + j];
            }
        }
        for j in 0..n {
            let s = softmax(&self.psi_at_node(state, j));
            for i in 0..m {
                r[2 * mn + i * n + j] = self.lumped[j] * (u[i * n + j] - s[i]);
            }
        }
        r
    }

    fn jacobian(&self, state: &[f64], alpha: f64) -> SparseMatrix {
        let (m, n) = (self.m, self.n_nodes);
        let mn = m * n;
        let e2 = self.epsilon * self.epsilon;
        let mut b = TripletBuilder::new();
        for i in 0..m {
            // rows of the z-tested equation
            b.add_block(i * n, i * n, &self.stiffness, e2 * alpha);
            for j in 0..n {
                let d = self.lumped[j];
                b.push(i * n + j, i * n + j, -2.0 * alpha * d);
                b.push(i * n + j, mn + i * n + j, alpha * d);
                b.push(i * n + j, 2 * mn + i * n + j, d);
            }
            // rows of the u-tested equation
            b.add_block(mn + i * n, mn + i * n, &self.stiffness, -self.tau);
            for j in 0..n {
                b.push(mn + i * n + j, i * n + j, self.lumped[j]);
            }
        }
        // nodal softmax identity rows, on the same measure as the others
        for j in 0..n {
            let s = softmax(&self.psi_at_node(state, j));
            let d = self.lumped[j];
            for i in 0..m {
                b.push(2 * mn + i * n + j, i * n + j, d);
                for l in 0..m {
                    let jac = if i == l { s[i] * (1.0 - s[i]) } else { -s[i] * s[l] };
                    b.push(2 * mn + i * n + j, 2 * mn + l * n + j, -d * jac);
                }
            }
        }
        b.build(3 * mn, 3 * mn).expect("indices in range")
    }

    fn latent_block(&self, state: &[f64]) -> Vec<f64> {
        state[2 * self.m * self.n_nodes..].to_vec()
    }

    /// Softmax recovery per node, phase-major like the state.
    fn latent_recovery(&self, state: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n_nodes);
        let mut out = vec![0.0; m * n];
        for j in 0..n {
            let s = softmax(&self.psi_at_node(state, j));
            for i in 0..m {
                out[i * n + j] = s[i];
            }
        }
        out
    }

    fn feasibility_margin(&self, state: &[f64]) -> f64 {
        self.latent_recovery(state)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn increment_norm(&self, state: &[f64], prev_state: &[f64]) -> f64 {
        let (m, n) = (self.m, self.n_nodes);
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..n {
                let d = state[i * n + j] - prev_state[i * n + j];
                acc += self.lumped[j] * d * d;
            }
        }
        acc.sqrt()
    }
}

/// Result of marching the flow.
pub struct MultiphaseFlow {
    /// Recovered (feasible) phase fields after the final step, phase-major.
    pub final_recovery: Vec<f64>,
    /// Primal phase fields after the final step.
    pub final_primal: Vec<f64>,
    /// One proximal trace per time step.
    pub traces: Vec<LvppTrace>,
    /// Phase masses after every step (step-major).
    pub masses: Vec<Vec<f64>>,
    pub initial_masses: Vec<f64>,
}

/// Marches `data.steps` backward-Euler steps, running the proximal loop for
/// each and feeding the recovered phases forward as the next previous state.
pub fn run_multiphase_flow(data: &MultiphaseData, cfg: &LvppConfig) -> Result<MultiphaseFlow> {
    let mesh = build_tri_mesh(data.n, [0.0, 1.0, 0.0, 1.0])?;
    let ops = P1Operators::from_tri_mesh(&mesh)?;
    let n_nodes = ops.num_nodes();
    let mut u_prev = vec![0.0; data.m * n_nodes];
    for j in 0..n_nodes {
        let vals = (data.initial)(ops.coords[j]);
        if vals.len() != data.m {
            return Err(Error::build(format!(
                "initial data returned {} phases, expected {}",
                vals.len(),
                data.m
            )));
        }
        for i in 0..data.m {
            u_prev[i * n_nodes + j] = vals[i];
        }
    }
    let mut traces = Vec::with_capacity(data.steps);
    let mut masses = Vec::with_capacity(data.steps);
    let mut final_recovery = u_prev.clone();
    let mut final_primal = u_prev.clone();
    let mut initial_masses = Vec::new();
    for step in 0..data.steps {
        let problem = build_step_from_operators(data, &ops, &u_prev)?;
        if step == 0 {
            initial_masses = problem.phase_masses(&u_prev);
        }
        let (state, trace) = run_lvpp(&problem, cfg)?;
        if !trace.converged {
            return Err(Error::Divergence(format!(
                "time step {step} did not converge within {} proximal steps",
                cfg.max_outer
            )));
        }
        final_recovery = problem.latent_recovery(&state);
        final_primal = problem.primal(&state);
        masses.push(problem.phase_masses(&final_recovery));
        traces.push(trace);
        u_prev = final_recovery.clone();
    }
    Ok(MultiphaseFlow {
        final_recovery,
        final_primal,
        traces,
        masses,
        initial_masses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_blend_lands_on_simplex() {
        for p in [[0.1, 0.2], [0.5, 0.5], [0.9, 0.05], [0.0, 1.0]] {
            let v = quadrant_blend(p, 0.05);
            assert_eq!(v.len(), 4);
            let sum: f64 = v.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            assert!(v.iter().all(|&t| t > 0.0));
        }
    }

    #[test]
    fn softmax_recovery_identities_hold_each_step() {
        let data = MultiphaseData::quadrant_preset(8, 2);
        let flow = run_multiphase_flow(&data, &multiphase_step_config()).unwrap();
        let n = (8 + 1) * (8 + 1);
        for j in 0..n {
            let sum: f64 = (0..4).map(|i| flow.final_recovery[i * n + j]).sum();
            assert!((sum - 1.0).abs() < 1e-12, "simplex sum {sum}");
            assert!((0..4).all(|i| flow.final_recovery[i * n + j] > 0.0));
        }
    }

    #[test]
    fn off_simplex_previous_state_rejected() {
        let data = MultiphaseData::quadrant_preset(2, 1);
        let n = 9;
        let bad = vec![0.5; 4 * n];
        assert!(build_multiphase_step(&data, &bad).is_err());
    }

    #[test]
    fn two_phase_relabeling_swaps_solutions() {
        let split = |p: Point, flip: bool| -> Vec<f64> {
            let s = 1.0 / (1.0 + (-(p[0] - 0.5) / 0.1).exp());
            if flip {
                vec![1.0 - s, s]
            } else {
                vec![s, 1.0 - s]
            }
        };
        let mut data = MultiphaseData::quadrant_preset(6, 1);
        data.m = 2;
        data.initial = Arc::new(move |p| split(p, false));
        let flow_a = run_multiphase_flow(&data, &multiphase_step_config()).unwrap();
        data.initial = Arc::new(move |p| split(p, true));
        let flow_b = run_multiphase_flow(&data, &multiphase_step_config()).unwrap();
        let n = 49;
        for j in 0..n {
            let a0 = flow_a.final_recovery[j];
            let b1 = flow_b.final_recovery[n + j];
            assert!((a0 - b1).abs() < 1e-10, "swap mismatch {a0} vs {b1}");
        }
    }
}
