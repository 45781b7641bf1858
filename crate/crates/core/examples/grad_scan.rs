// temporary: gradient-constraint inner-policy scan
use lvpp::lvpp::{run_lvpp, SaddleProblem};
use lvpp::problems::{build_gradient_constraint, gradient_paper_config, GradientData};

fn main() {
    let which: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    for (cap, c) in [(2usize, 1e-4f64), (3, 1e-4), (3, 1e-5), (4, 1e-5)] {
        let p = build_gradient_constraint(&GradientData::paper(which)).unwrap();
        let mut cfg = gradient_paper_config();
        cfg.newton.tol = c / which as f64;
        cfg.newton.max_iter = cap;
        cfg.strict_newton = false;
        let t0 = std::time::Instant::now();
        match run_lvpp(&p, &cfg) {
            Ok((state, tr)) => {
                let per: Vec<String> = tr.rows.iter().map(|r| r.newton_iters.to_string()).collect();
                let margin = p.feasibility_margin(&state);
                println!(
                    "cap{cap} c={c:.0e} n={which}: outer={} solves={} conv={} margin={margin:.2e} ({:.1?}) per=[{}]",
                    tr.outer_iterations(), tr.total_linear_solves(), tr.converged, t0.elapsed(), per.join(","));
            }
            Err(e) => println!("cap{cap} c={c:.0e} n={which}: ERR {e:.60}"),
        }
    }
}
