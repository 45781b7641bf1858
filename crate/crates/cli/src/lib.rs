//! Library side of the command-line front end: request plumbing, problem
//! dispatch, and the file writers.

pub mod writers;

use std::path::{Path, PathBuf};

use lvpp::discretize::{build_grid2d, build_interval_mesh, build_tri_mesh};
use lvpp::entropy::Point;
use lvpp::equality::{eps_sweep, EqualityProblem};
use lvpp::error::{Error, Result};
use lvpp::lvpp::{run_lvpp, LvppConfig, LvppTrace, SaddleProblem};
use lvpp::problems::*;
use lvpp::schedule::{AlphaRule, AlphaSchedule};
use self::nalgebra_io::read_matrix_blocks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    ObstacleFd,
    ObstacleFem,
    Gradient,
    Intersection,
    Eikonal,
    Multiphase,
    Qvi,
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
}

/// One CLI invocation, resolved to concrete parameters.
#[derive(Debug, Clone)]
pub struct RunRequest {
    pub subcommand: Subcommand,
    /// Resolution override; `None` takes the preset default.
    pub n: Option<usize>,
    /// Restore the full published resolution.
    pub paper_scale: bool,
    pub alpha_rule: Option<AlphaRule>,
    pub alpha0: Option<f64>,
    pub growth: Option<f64>,
    pub cap: Option<f64>,
    pub de_r: Option<f64>,
    pub de_q: Option<f64>,
    pub tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub newton_tol: Option<f64>,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    /// Slope cap for the intersection problem.
    pub phi_c: f64,
    /// Time steps for the multiphase flow.
    pub steps: usize,
    /// Dense-matrix file for the equality subcommand.
    pub matrix_file: Option<PathBuf>,
    pub eps_sweep: (f64, f64),
    pub alpha1: f64,
}

impl RunRequest {
    pub fn new(subcommand: Subcommand) -> Self {
        RunRequest {
            subcommand,
            n: None,
            paper_scale: false,
            alpha_rule: None,
            alpha0: None,
            growth: None,
            cap: None,
            de_r: None,
            de_q: None,
            tol: None,
            max_outer: None,
            newton_tol: None,
            out_dir: default_out_dir(),
            format: OutputFormat::Csv,
            phi_c: 2.0,
            steps: 10,
            matrix_file: None,
            eps_sweep: (1e-1, 1e-6),
            alpha1: 1.0,
        }
    }
}

/// Output directory: LVPP_OUT_DIR when set, else the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("LVPP_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// One-line result summary, also the exit-status carrier.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub converged: bool,
    pub outer_iterations: usize,
    pub total_linear_solves: usize,
    pub final_increment: f64,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {} outer iterations, {} linear solves, final increment {:.3e}{}",
            self.label,
            self.outer_iterations,
            self.total_linear_solves,
            self.final_increment,
            if self.converged { "" } else { " (NOT CONVERGED)" }
        )
    }
}

fn apply_overrides(cfg: &mut LvppConfig, req: &RunRequest) -> Result<()> {
    if let Some(rule) = req.alpha_rule {
        let alpha0 = req.alpha0.unwrap_or(1.0);
        let growth = req.growth.unwrap_or(2.0);
        let cap = req.cap.unwrap_or(f64::INFINITY);
        let r = req.de_r.unwrap_or(1.5);
        let q = req.de_q.unwrap_or(1.5);
        cfg.schedule = AlphaSchedule::new(rule, alpha0, growth, cap, r, q)?;
    } else {
        if let Some(a0) = req.alpha0 {
            let rule = cfg.schedule.rule();
            cfg.schedule = AlphaSchedule::new(
                rule,
                a0,
                req.growth.unwrap_or(2.0),
                req.cap.unwrap_or(f64::INFINITY),
                req.de_r.unwrap_or(1.5),
                req.de_q.unwrap_or(1.5),
            )?;
        }
    }
    if let Some(tol) = req.tol {
        if tol <= 0.0 {
            return Err(Error::invalid("outer tolerance must be positive"));
        }
        cfg.outer_tol = tol;
    }
    if let Some(m) = req.max_outer {
        cfg.max_outer = m;
    }
    if let Some(nt) = req.newton_tol {
        cfg.newton.tol = nt;
    }
    Ok(())
}

fn trace_summary(label: &str, trace: &LvppTrace) -> RunSummary {
    RunSummary {
        label: label.to_string(),
        converged: trace.converged,
        outer_iterations: trace.outer_iterations(),
        total_linear_solves: trace.total_linear_solves(),
        final_increment: trace.final_increment(),
    }
}

/// Builds the requested problem, runs the outer loop (or the ε-sweep), and
/// writes the trace and field files.
pub fn run(req: &RunRequest) -> Result<RunSummary> {
    std::fs::create_dir_all(&req.out_dir)?;
    match req.subcommand {
        Subcommand::ObstacleFd => run_obstacle_fd(req),
        Subcommand::ObstacleFem => run_obstacle_fem(req),
        Subcommand::Gradient => run_gradient(req),
        Subcommand::Intersection => run_intersection(req),
        Subcommand::Eikonal => run_eikonal(req),
        Subcommand::Multiphase => run_multiphase(req),
        Subcommand::Qvi => run_qvi(req),
        Subcommand::Equality => run_equality(req),
    }
}

fn out_path(req: &RunRequest, name: &str) -> PathBuf {
    req.out_dir.join(name)
}

fn run_obstacle_fd(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 127 } else { 31 });
    let data = ObstacleData::fd_benchmark(n);
    let problem = build_obstacle(&data)?;
    let grid = build_grid2d(n, data.bbox)?;
    let mut cfg = obstacle_benchmark_config(grid.hx);
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    write_common_fd(req, "obstacle_fd", &grid, &problem, &state, &trace)?;
    Ok(trace_summary("obstacle-fd", &trace))
}

fn write_common_fd(
    req: &RunRequest,
    stem: &str,
    grid: &lvpp::discretize::Grid2D,
    problem: &ObstacleProblem,
    state: &[f64],
    trace: &LvppTrace,
) -> Result<()> {
    writers::write_trace_csv(&out_path(req, &format!("{stem}_trace.csv")), trace)?;
    let u = problem.primal(state);
    let recovery = problem.latent_recovery(state);
    match req.format {
        OutputFormat::Csv => {
            writers::write_field_csv(&out_path(req, &format!("{stem}_u.csv")), problem.coords(), &u)?;
            writers::write_field_csv(
                &out_path(req, &format!("{stem}_recovery.csv")),
                problem.coords(),
                &recovery,
            )?;
        }
        OutputFormat::Vtk => {
            writers::write_vtk_grid(&out_path(req, &format!("{stem}_u.vtk")), grid, &u, 0.0)?;
            writers::write_vtk_grid(
                &out_path(req, &format!("{stem}_recovery.vtk")),
                grid,
                &recovery,
                0.0,
            )?;
        }
    }
    Ok(())
}

fn run_obstacle_fem(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 128 } else { 32 });
    let data = ObstacleData::p1_benchmark(n);
    let problem = build_obstacle(&data)?;
    let mut cfg = obstacle_config();
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    writers::write_trace_csv(&out_path(req, "obstacle_fem_trace.csv"), &trace)?;
    let u = problem.primal(&state);
    let recovery = problem.latent_recovery(&state);
    match req.format {
        OutputFormat::Csv => {
            writers::write_field_csv(&out_path(req, "obstacle_fem_u.csv"), problem.coords(), &u)?;
            writers::write_field_csv(
                &out_path(req, "obstacle_fem_recovery.csv"),
                problem.coords(),
                &recovery,
            )?;
        }
        OutputFormat::Vtk => {
            let mesh = build_tri_mesh(n, data.bbox)?;
            let full = nodal_with_boundary(&mesh, problem.coords(), &u, 0.0);
            writers::write_vtk_tri(&out_path(req, "obstacle_fem_u.vtk"), &mesh, &full, None)?;
        }
    }
    Ok(trace_summary("obstacle-fem", &trace))
}

/// Scatters interior values onto the full node set, filling boundary nodes.
fn nodal_with_boundary(
    mesh: &lvpp::discretize::TriMesh,
    interior_coords: &[Point],
    interior_values: &[f64],
    boundary_value: f64,
) -> Vec<f64> {
    let mut full = vec![boundary_value; mesh.num_vertices()];
    let interior = mesh.interior_nodes();
    assert_eq!(interior.len(), interior_coords.len());
    for (slot, &node) in interior.iter().enumerate() {
        full[node] = interior_values[slot];
    }
    full
}

fn run_gradient(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 200 } else { 64 });
    let data = GradientData::paper(n);
    let problem = build_gradient_constraint(&data)?;
    let mut cfg = gradient_paper_config();
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    writers::write_trace_csv(&out_path(req, "gradient_trace.csv"), &trace)?;
    let mesh = build_tri_mesh(n, data.bbox)?;
    let interior = mesh.interior_nodes();
    let u = problem.primal(&state);
    let mut u_nodes = vec![0.0; mesh.num_vertices()];
    for (slot, &node) in interior.iter().enumerate() {
        u_nodes[node] = u[slot];
    }
    let grad_norms = problem.recovered_gradient_norms(&state);
    match req.format {
        OutputFormat::Csv => {
            writers::write_field_csv(&out_path(req, "gradient_u.csv"), &mesh.vertices, &u_nodes)?;
            writers::write_cell_csv(&out_path(req, "gradient_grad_norm.csv"), &grad_norms)?;
        }
        OutputFormat::Vtk => {
            writers::write_vtk_tri(
                &out_path(req, "gradient_u.vtk"),
                &mesh,
                &u_nodes,
                Some(&grad_norms),
            )?;
        }
    }
    Ok(trace_summary("gradient", &trace))
}

fn run_intersection(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 1024 } else { 256 });
    let data = IntersectionData::preset(n, req.phi_c);
    let problem = build_intersection(&data)?;
    let mut cfg = intersection_config();
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    writers::write_trace_csv(&out_path(req, "intersection_trace.csv"), &trace)?;
    let mesh = build_interval_mesh(n, [0.0, 1.0])?;
    let recovery = problem.nodal_recovery(&state);
    let coords: Vec<Point> = mesh.interior_nodes().iter().map(|&i| mesh.coords(i)).collect();
    writers::write_field_csv(&out_path(req, "intersection_recovery.csv"), &coords, &recovery)?;
    let u = problem.primal(&state);
    writers::write_field_csv(&out_path(req, "intersection_u.csv"), &coords, &u)?;
    Ok(trace_summary("intersection", &trace))
}

fn run_eikonal(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 128 } else { 32 });
    let problem = build_eikonal(n, [0.0, 1.0, 0.0, 1.0])?;
    let mut cfg = eikonal_config(1.0 / n as f64);
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    writers::write_trace_csv(&out_path(req, "eikonal_trace.csv"), &trace)?;
    let mesh = build_tri_mesh(n, [0.0, 1.0, 0.0, 1.0])?;
    let interior = mesh.interior_nodes();
    let u = problem.primal(&state);
    let mut u_nodes = vec![0.0; mesh.num_vertices()];
    for (slot, &node) in interior.iter().enumerate() {
        u_nodes[node] = u[slot];
    }
    match req.format {
        OutputFormat::Csv => {
            writers::write_field_csv(&out_path(req, "eikonal_u.csv"), &mesh.vertices, &u_nodes)?;
        }
        OutputFormat::Vtk => {
            writers::write_vtk_tri(&out_path(req, "eikonal_u.vtk"), &mesh, &u_nodes, None)?;
        }
    }
    Ok(trace_summary("eikonal", &trace))
}

fn run_multiphase(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(64);
    let data = MultiphaseData::quadrant_preset(n, req.steps);
    let mut cfg = multiphase_step_config();
    apply_overrides(&mut cfg, req)?;
    let flow = run_multiphase_flow(&data, &cfg)?;
    let mesh = build_tri_mesh(n, [0.0, 1.0, 0.0, 1.0])?;
    let nodes = mesh.num_vertices();
    for phase in 0..data.m {
        let field = &flow.final_recovery[phase * nodes..(phase + 1) * nodes];
        match req.format {
            OutputFormat::Csv => writers::write_field_csv(
                &out_path(req, &format!("multiphase_phase{phase}.csv")),
                &mesh.vertices,
                field,
            )?,
            OutputFormat::Vtk => writers::write_vtk_tri(
                &out_path(req, &format!("multiphase_phase{phase}.vtk")),
                &mesh,
                field,
                None,
            )?,
        }
    }
    if let Some(last) = flow.traces.last() {
        writers::write_trace_csv(&out_path(req, "multiphase_last_step_trace.csv"), last)?;
    }
    let total: usize = flow.traces.iter().map(|t| t.total_linear_solves()).sum();
    let outer: usize = flow.traces.iter().map(|t| t.outer_iterations()).sum();
    Ok(RunSummary {
        label: "multiphase".into(),
        converged: flow.traces.iter().all(|t| t.converged),
        outer_iterations: outer,
        total_linear_solves: total,
        final_increment: flow.traces.last().map(|t| t.final_increment()).unwrap_or(f64::NAN),
    })
}

fn run_qvi(req: &RunRequest) -> Result<RunSummary> {
    let n = req.n.unwrap_or(if req.paper_scale { 100 } else { 50 });
    let data = QviData::paper(n);
    let problem = build_qvi_thermoforming(&data)?;
    let mut cfg = qvi_paper_config(1.0 / n as f64);
    apply_overrides(&mut cfg, req)?;
    let (state, trace) = run_lvpp(&problem, &cfg)?;
    writers::write_trace_csv(&out_path(req, "qvi_trace.csv"), &trace)?;
    let mesh = build_tri_mesh(n, [0.0, 1.0, 0.0, 1.0])?;
    let interior = mesh.interior_nodes();
    let mut u_nodes = vec![0.0; mesh.num_vertices()];
    let mut rec_nodes = vec![0.0; mesh.num_vertices()];
    let u = problem.primal(&state);
    let recovery = problem.latent_recovery(&state);
    for (slot, &node) in interior.iter().enumerate() {
        u_nodes[node] = u[slot];
        rec_nodes[node] = recovery[slot];
    }
    let temperature = problem.temperature(&state);
    let mold = problem.mold(&state);
    match req.format {
        OutputFormat::Csv => {
            writers::write_field_csv(&out_path(req, "qvi_u.csv"), &mesh.vertices, &u_nodes)?;
            writers::write_field_csv(&out_path(req, "qvi_membrane.csv"), &mesh.vertices, &rec_nodes)?;
            writers::write_field_csv(&out_path(req, "qvi_temperature.csv"), &mesh.vertices, &temperature)?;
            writers::write_field_csv(&out_path(req, "qvi_mold.csv"), &mesh.vertices, &mold)?;
        }
        OutputFormat::Vtk => {
            writers::write_vtk_tri(&out_path(req, "qvi_u.vtk"), &mesh, &u_nodes, None)?;
            writers::write_vtk_tri(&out_path(req, "qvi_mold.vtk"), &mesh, &mold, None)?;
        }
    }
    Ok(trace_summary("qvi", &trace))
}

fn run_equality(req: &RunRequest) -> Result<RunSummary> {
    let problem = match &req.matrix_file {
        Some(path) => {
            let blocks = read_matrix_blocks(path)?;
            if blocks.len() < 3 {
                return Err(Error::invalid(format!(
                    "matrix file {} holds {} blocks; need A, B, F (and optionally psi0)",
                    path.display(),
                    blocks.len()
                )));
            }
            let a = blocks[0].clone();
            let b = blocks[1].clone();
            let f_block = &blocks[2];
            let f = nalgebra::DVector::from_column_slice(f_block.as_slice());
            match blocks.get(3) {
                Some(p0) => EqualityProblem::with_start(
                    a,
                    b.clone(),
                    f,
                    nalgebra::DVector::from_column_slice(p0.as_slice()),
                    req.alpha1,
                )?,
                None => {
                    let m = b.nrows();
                    EqualityProblem::with_start(a, b, f, nalgebra::DVector::zeros(m), req.alpha1)?
                }
            }
        }
        None => EqualityProblem::demo(),
    };
    let (lo, hi) = req.eps_sweep;
    let (start, end) = (lo.max(hi), lo.min(hi));
    let mut eps_values = Vec::new();
    let mut eps = start;
    while eps >= end * (1.0 - 1e-12) {
        eps_values.push(eps);
        eps /= 10.0;
    }
    let rows = eps_sweep(&problem, &eps_values)?;
    let mut out = String::from("eps,err_u,constraint_norm,lambda_err,apriori_ok\n");
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            writers::fmt_f64(r.eps),
            writers::fmt_f64(r.err_u),
            writers::fmt_f64(r.constraint_norm),
            writers::fmt_f64(r.lambda_err),
            r.apriori_ok
        ));
    }
    std::fs::write(out_path(req, "equality_sweep.csv"), out)?;
    let monotone = rows.windows(2).all(|w| w[1].err_u <= w[0].err_u + 1e-15);
    Ok(RunSummary {
        label: "equality".into(),
        converged: monotone && rows.iter().all(|r| r.apriori_ok),
        outer_iterations: rows.len(),
        total_linear_solves: rows.len(),
        final_increment: rows.last().map(|r| r.err_u).unwrap_or(f64::NAN),
    })
}

/// Plain-text dense-matrix reader: each block is a `rows cols` line followed
/// by whitespace-separated row-major entries; blocks repeat until EOF.
mod nalgebra_io {
    use super::*;
    use nalgebra::DMatrix;

    pub fn read_matrix_blocks(path: &Path) -> Result<Vec<DMatrix<f64>>> {
        let text = std::fs::read_to_string(path)?;
        let mut tokens = text.split_whitespace().peekable();
        let mut blocks = Vec::new();
        while tokens.peek().is_some() {
            let rows: usize = next_token(&mut tokens)?;
            let cols: usize = next_token(&mut tokens)?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(next_token::<f64>(&mut tokens)?);
            }
            blocks.push(DMatrix::from_row_slice(rows, cols, &data));
        }
        Ok(blocks)
    }

    fn next_token<T: std::str::FromStr>(
        tokens: &mut std::iter::Peekable<std::str::SplitWhitespace<'_>>,
    ) -> Result<T> {
        tokens
            .next()
            .ok_or_else(|| Error::invalid("matrix file ended mid-block"))?
            .parse::<T>()
            .map_err(|_| Error::invalid("matrix file holds a non-numeric token"))
    }
}
