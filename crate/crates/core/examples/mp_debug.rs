// temporary debug probe
use lvpp::problems::{build_multiphase_step, multiphase_step_config, MultiphaseData};
use lvpp::problems::multiphase::quadrant_blend;
use lvpp::lvpp::{run_lvpp, SaddleProblem};
use lvpp::discretize::{build_tri_mesh, P1Operators};

fn main() {
    let data = MultiphaseData::quadrant_preset(8, 1);
    let mesh = build_tri_mesh(8, [0.0, 1.0, 0.0, 1.0]).unwrap();
    let ops = P1Operators::from_tri_mesh(&mesh).unwrap();
    let n = ops.num_nodes();
    let mut u_prev = vec![0.0; 4 * n];
    for j in 0..n {
        let v = quadrant_blend(ops.coords[j], 0.05);
        for i in 0..4 { u_prev[i * n + j] = v[i]; }
    }
    let p = build_multiphase_step(&data, &u_prev).unwrap();
    let mut cfg = multiphase_step_config();
    cfg.max_outer = 40;
    match run_lvpp(&p, &cfg) {
        Ok((_, trace)) => {
            for r in &trace.rows {
                println!("k={:2} alpha={} newton={} inc={:.3e} margin={:.3e}", r.k, r.alpha, r.newton_iters, r.increment_norm, r.min_margin);
            }
            println!("converged={}", trace.converged);
        }
        Err(e) => println!("error: {e}"),
    }
}
