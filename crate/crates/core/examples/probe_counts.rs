// temporary: count calibration for qvi, gradient, eikonal
use lvpp::lvpp::run_lvpp;
use lvpp::problems::*;
use lvpp::problems::eikonal::build_eikonal_1d;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "qvi" => {
            for n in [50usize, 100] {
                let p = build_qvi_thermoforming(&QviData::paper(n)).unwrap();
                let t0 = std::time::Instant::now();
                match run_lvpp(&p, &qvi_paper_config(1.0 / n as f64)) {
                    Ok((_, tr)) => {
                        let per: Vec<String> = tr.rows.iter().map(|r| r.newton_iters.to_string()).collect();
                        println!("qvi n={n}: outer={} newton={} conv={} ({:.1?}) per=[{}]",
                            tr.outer_iterations(), tr.total_newton_iters(), tr.converged, t0.elapsed(), per.join(","));
                    }
                    Err(e) => println!("qvi n={n}: ERR {e}"),
                }
            }
        }
        "grad" => {
            for n in [64usize, 200] {
                let p = build_gradient_constraint(&GradientData::paper(n)).unwrap();
                let t0 = std::time::Instant::now();
                match run_lvpp(&p, &gradient_paper_config()) {
                    Ok((_, tr)) => {
                        let per: Vec<String> = tr.rows.iter().map(|r| r.newton_iters.to_string()).collect();
                        println!("grad n={n}: outer={} solves={} conv={} ({:.1?}) per=[{}]",
                            tr.outer_iterations(), tr.total_linear_solves(), tr.converged, t0.elapsed(), per.join(","));
                    }
                    Err(e) => println!("grad n={n}: ERR {e}"),
                }
            }
        }
        "eik" => {
            let p1 = build_eikonal_1d(64, [0.0, 1.0]).unwrap();
            let (_, tr) = run_lvpp(&p1, &eikonal_config(1.0 / 64.0)).unwrap();
            let per: Vec<String> = tr.rows.iter().map(|r| r.newton_iters.to_string()).collect();
            println!("eik 1d n=64: outer={} per=[{}]", tr.outer_iterations(), per.join(","));
            for n in [16usize, 32, 64] {
                let p = build_eikonal(n, [0.0, 1.0, 0.0, 1.0]).unwrap();
                let t0 = std::time::Instant::now();
                let (state, tr) = run_lvpp(&p, &eikonal_config(1.0 / n as f64)).unwrap();
                let u = p.primal(&state);
                // max-norm error vs distance oracle on interior nodes
                let mesh = lvpp::discretize::build_tri_mesh(n, [0.0, 1.0, 0.0, 1.0]).unwrap();
                let interior = mesh.interior_nodes();
                let mut err = 0.0f64;
                let mut umax = 0.0f64;
                for (slot, &node) in interior.iter().enumerate() {
                    let d = distance_to_boundary([0.0, 1.0, 0.0, 1.0], mesh.vertices[node]).unwrap();
                    err = err.max((u[slot] - d).abs());
                    umax = umax.max(u[slot]);
                }
                let per: Vec<String> = tr.rows.iter().map(|r| r.newton_iters.to_string()).collect();
                println!("eik n={n}: outer={} err_inf={err:.4e} max_u={umax:.4} conv={} ({:.1?}) per=[{}]",
                    tr.outer_iterations(), tr.converged, t0.elapsed(), per.join(","));
            }
        }
        _ => println!("usage: probe_counts [qvi|grad|eik]"),
    }
}
