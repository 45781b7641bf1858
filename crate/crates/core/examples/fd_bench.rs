// temporary calibration probe
use lvpp::lvpp::run_lvpp;
use lvpp::problems::{build_obstacle, obstacle_benchmark_config, ObstacleData};

fn main() {
    for (k, n) in [(1usize, 3usize), (2, 7), (3, 15), (4, 31), (5, 63), (6, 127)] {
        let data = ObstacleData::fd_benchmark(n);
        let p = build_obstacle(&data).unwrap();
        let h = 2.0 / (n as f64 + 1.0);
        let t0 = std::time::Instant::now();
        match run_lvpp(&p, &obstacle_benchmark_config(h)) {
            Ok((_, trace)) => println!(
                "h=2^-{k} n={n:3} outer={:2} newton={:2} solves={:2} converged={} ({:.2?})",
                trace.outer_iterations(),
                trace.total_newton_iters(),
                trace.total_linear_solves(),
                trace.converged,
                t0.elapsed()
            ),
            Err(e) => println!("h=2^-{k}: error {e}"),
        }
    }
}
