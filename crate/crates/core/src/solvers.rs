//! Sparse direct linear solves and the damped Newton method driving every
//! discrete saddle-point subproblem.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::discretize::SparseMatrix;
use crate::error::{Error, Result};

/// Solves A x = b by sparse LU with partial pivoting (fill-reducing ordering
/// inside). Well-conditioned systems satisfy ‖Ax − b‖₂ ≤ 1e-10·(1 + ‖b‖₂);
/// singularity is detected through a backward-stability residual test, which
/// tolerates legitimate ill-conditioning of late-stage Newton systems.
pub fn solve_sparse(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let triplets: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let mat = SparseColMat::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Assembly(format!("sparse conversion failed: {e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|_| Error::SingularMatrix { newton_iter: None })?;
    let rhs = faer::Mat::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix { newton_iter: None });
    }
    // Backward-stability check: r should be tiny relative to |A||x| + |b|.
    let r = a.matvec(&x);
    let rnorm = r
        .iter()
        .zip(b.iter())
        .map(|(ri, bi)| (ri - bi) * (ri - bi))
        .sum::<f64>()
        .sqrt();
    let anorm_inf = (0..n)
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = anorm_inf * xnorm + bnorm;
    if rnorm > 1e-8 * scale + f64::MIN_POSITIVE {
        return Err(Error::SingularMatrix { newton_iter: None });
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Absolute tolerance on the ℓ²-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub damping: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-8,
            max_iter: 50,
            max_halvings: 20,
            damping: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    /// One per Jacobian factorization; this is the statistic the experiment
    /// tables count.
    pub linear_solves: usize,
    pub final_residual: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton: x ← x + s·δ with δ from `solve_sparse(J, −r)` and s from
/// backtracking (halve until the residual norm drops, else accept the full
/// step). Convergence is ‖r‖₂ ≤ tol; an already-converged start costs zero
/// iterations.
pub fn newton_solve<R, J>(
    residual: R,
    jacobian: J,
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)>
where
    R: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> SparseMatrix,
{
    if cfg.tol <= 0.0 {
        return Err(Error::invalid("Newton tolerance must be positive"));
    }
    if cfg.max_iter < 1 {
        return Err(Error::invalid("Newton needs max_iter >= 1"));
    }
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("non-finite residual at the initial guess".into()));
    }
    let mut rnorm = norm2(&r);
    let mut report = NewtonReport {
        converged: rnorm <= cfg.tol,
        final_residual: rnorm,
        ..Default::default()
    };
    if report.converged {
        return Ok((x, report));
    }
    for it in 0..cfg.max_iter {
        let jac = jacobian(&x);
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_sparse(&jac, &neg_r).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::SingularMatrix {
                newton_iter: Some(it + 1),
            },
            other => other,
        })?;
        report.linear_solves += 1;
        report.iterations += 1;

        let trial = |s: f64| -> (Vec<f64>, Vec<f64>, f64) {
            let xt: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, di)| xi + s * di).collect();
            let rt = residual(&xt);
            let nt = norm2(&rt);
            (xt, rt, nt)
        };

        let (mut xn, mut rn, mut nn) = trial(1.0);
        if cfg.damping && !(nn < rnorm) {
            let mut s = 1.0;
            let mut found = false;
            for _ in 0..cfg.max_halvings {
                s *= 0.5;
                let (xt, rt, nt) = trial(s);
                if nt < rnorm {
                    (xn, rn, nn) = (xt, rt, nt);
                    found = true;
                    break;
                }
            }
            if !found {
                // halvings exhausted: accept the full step
                (xn, rn, nn) = trial(1.0);
            }
        }
        x = xn;
        r = rn;
        rnorm = nn;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite residual at Newton iteration {}",
                it + 1
            )));
        }
        report.final_residual = rnorm;
        if rnorm <= cfg.tol {
            report.converged = true;
            break;
        }
    }
    Ok((x, report))
}
