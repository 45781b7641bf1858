use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand, ValueEnum};
use lvpp::schedule::AlphaRule;
use lvpp_cli::{default_out_dir, run, OutputFormat, RunRequest, Subcommand};

#[derive(Parser)]
#[command(
    name = "lvpp",
    about = "Proximal saddle-point solvers for pointwise-constrained variational problems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    Constant,
    CappedGeometric,
    DoubleExp,
    NewtonAdaptive,
}

impl From<RuleArg> for AlphaRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Constant => AlphaRule::Constant,
            RuleArg::CappedGeometric => AlphaRule::CappedGeometric,
            RuleArg::DoubleExp => AlphaRule::DoubleExponential,
            RuleArg::NewtonAdaptive => AlphaRule::NewtonAdaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Vtk,
}

#[derive(Debug, Clone, clap::Args)]
struct CommonArgs {
    /// Resolution (interior points or cells per axis, elements in 1D)
    #[arg(long)]
    n: Option<usize>,
    /// Run at the full published resolution
    #[arg(long)]
    paper_scale: bool,
    /// Proximal parameter update rule
    #[arg(long, value_enum)]
    alpha_rule: Option<RuleArg>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Growth factor c of the capped-geometric rule
    #[arg(long)]
    growth: Option<f64>,
    /// Cap C on the proximal parameter
    #[arg(long)]
    cap: Option<f64>,
    /// Double-exponential base r
    #[arg(long)]
    de_r: Option<f64>,
    /// Double-exponential order q
    #[arg(long)]
    de_q: Option<f64>,
    /// Outer increment tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Output directory (defaults to LVPP_OUT_DIR or the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format for solution fields
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Obstacle benchmark, five-point finite differences on (-1,1)^2
    ObstacleFd {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated resolutions to run one after another
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
    },
    /// Obstacle benchmark, P1 elements on the same square
    ObstacleFem {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Gradient-norm-constrained Dirichlet problem on the unit square
    Gradient {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Obstacle + slope constraint intersection on the unit interval
    Intersection {
        #[command(flatten)]
        common: CommonArgs,
        /// Slope cap on [0, 0.2] and [0.8, 1]
        #[arg(long, default_value_t = 2.0)]
        phi_c: f64,
    },
    /// Eikonal equation (distance function) on the unit square
    Eikonal {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Four-phase Gibbs-simplex gradient flow
    Multiphase {
        #[command(flatten)]
        common: CommonArgs,
        /// Backward-Euler steps to march
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Thermoforming quasi-variational inequality
    Qvi {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Linear equality constraints: KKT system vs the ball-penalty sweep
    Equality {
        /// Dense-matrix file with blocks A, B, F (and optionally psi0);
        /// each block is a `rows cols` line plus row-major entries
        #[arg(long)]
        matrix_file: Option<PathBuf>,
        /// Sweep bounds as start:end, swept by decades
        #[arg(long, default_value = "1e-1:1e-6", value_parser = parse_sweep)]
        eps_sweep: (f64, f64),
        #[arg(long, default_value_t = 1.0)]
        alpha1: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_sweep(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| "expected start:end, e.g. 1e-1:1e-6".to_string())?;
    let lo: f64 = a.parse().map_err(|_| format!("bad number {a}"))?;
    let hi: f64 = b.parse().map_err(|_| format!("bad number {b}"))?;
    if lo <= 0.0 || hi <= 0.0 {
        return Err("sweep bounds must be positive".into());
    }
    Ok((lo, hi))
}

fn apply_common(req: &mut RunRequest, c: &CommonArgs) {
    req.n = c.n;
    req.paper_scale = c.paper_scale;
    req.alpha_rule = c.alpha_rule.map(Into::into);
    req.alpha0 = c.alpha0;
    req.growth = c.growth;
    req.cap = c.cap;
    req.de_r = c.de_r;
    req.de_q = c.de_q;
    req.tol = c.tol;
    req.max_outer = c.max_outer;
    req.newton_tol = c.newton_tol;
    if let Some(out) = &c.out {
        req.out_dir = out.clone();
    }
    req.format = match c.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Vtk => OutputFormat::Vtk,
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let requests: Vec<RunRequest> = match &cli.command {
        Command::ObstacleFd { common, sweep } => {
            let mut base = RunRequest::new(Subcommand::ObstacleFd);
            apply_common(&mut base, common);
            match sweep {
                Some(ns) => ns
                    .iter()
                    .map(|&n| {
                        let mut r = base.clone();
                        r.n = Some(n);
                        r.out_dir = base.out_dir.join(format!("n{n}"));
                        r
                    })
                    .collect(),
                None => vec![base],
            }
        }
        Command::ObstacleFem { common } => {
            let mut r = RunRequest::new(Subcommand::ObstacleFem);
            apply_common(&mut r, common);
            vec![r]
        }
        Command::Gradient { common } => {
            let mut r = RunRequest::new(Subcommand::Gradient);
            apply_common(&mut r, common);
            vec![r]
        }
        Command::Intersection { common, phi_c } => {
            let mut r = RunRequest::new(Subcommand::Intersection);
            apply_common(&mut r, common);
            r.phi_c = *phi_c;
            vec![r]
        }
        Command::Eikonal { common } => {
            let mut r = RunRequest::new(Subcommand::Eikonal);
            apply_common(&mut r, common);
            vec![r]
        }
        Command::Multiphase { common, steps } => {
            let mut r = RunRequest::new(Subcommand::Multiphase);
            apply_common(&mut r, common);
            r.steps = *steps;
            vec![r]
        }
        Command::Qvi { common } => {
            let mut r = RunRequest::new(Subcommand::Qvi);
            apply_common(&mut r, common);
            vec![r]
        }
        Command::Equality {
            matrix_file,
            eps_sweep,
            alpha1,
            out,
        } => {
            let mut r = RunRequest::new(Subcommand::Equality);
            r.matrix_file = matrix_file.clone();
            r.eps_sweep = *eps_sweep;
            r.alpha1 = *alpha1;
            if let Some(o) = out {
                r.out_dir = o.clone();
            } else {
                r.out_dir = default_out_dir();
            }
            vec![r]
        }
    };

    let mut ok = true;
    for req in &requests {
        match run(req) {
            Ok(summary) => {
                println!("{summary}");
                ok &= summary.converged;
            }
            Err(e) => {
                eprintln!("error: {e}");
                ok = false;
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
