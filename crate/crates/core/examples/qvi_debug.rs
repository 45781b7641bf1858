// temporary: qvi run inspection
use lvpp::lvpp::{run_lvpp, SaddleProblem};
use lvpp::problems::{build_qvi_thermoforming, qvi_paper_config, QviData};

fn main() {
    let p = build_qvi_thermoforming(&QviData::paper(50)).unwrap();
    let (state, tr) = run_lvpp(&p, &qvi_paper_config(1.0 / 50.0)).unwrap();
    for r in &tr.rows {
        println!("k={:2} alpha={:9.4} newton={} inc={:.3e} min_gap={:.3e}", r.k, r.alpha, r.newton_iters, r.increment_norm, r.min_margin);
    }
    let u = p.primal(&state);
    let t = p.temperature(&state);
    let mold = p.mold(&state);
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let tmax = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mmax = mold.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("max u={umax:.4} T in [{tmin:.4},{tmax:.4}] max mold={mmax:.4}");
    let c = p.qvi_consistency(&state).unwrap();
    println!("consistency: temp_dual={:.3e} comp_max={:.3e} mu_min={:.3e} viol={:.3e}", c.temp_dual, c.comp_max, c.mu_min, c.primal_violation);
}
