//! Linear equality constraints at the matrix level: the classical KKT
//! saddle system, its ε-scaled ball-penalty regularization, and the ε ↓ 0
//! Lagrange-multiplier limit.

use nalgebra::{DMatrix, DVector};

use crate::entropy::{ball_map, ball_map_jacobian};
use crate::error::{Error, Result};

/// min ½uᵀAu − Fᵀu subject to B u = 0, with A symmetric positive definite
/// and B of full row rank.
#[derive(Debug, Clone)]
pub struct EqualityProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Initial latent variable ψ⁰ (zero by convention).
    pub psi0: DVector<f64>,
    pub alpha1: f64,
}

impl EqualityProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, f: DVector<f64>) -> Result<Self> {
        let m = b.nrows();
        Self::with_start(a, b, f, DVector::zeros(m), 1.0)
    }

    pub fn with_start(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        f: DVector<f64>,
        psi0: DVector<f64>,
        alpha1: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::invalid("A must be square"));
        }
        if b.ncols() != n || f.len() != n || psi0.len() != b.nrows() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.ncols(),
            });
        }
        if alpha1 <= 0.0 {
            return Err(Error::invalid("alpha1 must be positive"));
        }
        let asym = (&a - a.transpose()).norm();
        if asym > 1e-12 * (1.0 + a.norm()) {
            return Err(Error::invalid(format!("A is not symmetric (defect {asym:.3e})")));
        }
        let rank = b.clone().svd(false, false).rank(1e-12 * (1.0 + b.norm()));
        if rank < b.nrows() {
            return Err(Error::invalid(format!(
                "B has rank {rank} < {} rows",
                b.nrows()
            )));
        }
        Ok(EqualityProblem { a, b, f, psi0, alpha1 })
    }

    /// Hand-checkable demo instance: A = I₂, B = [1 1], F = (1, 0), whose
    /// KKT solution is u = (1/2, −1/2), λ = 1/2.
    pub fn demo() -> Self {
        EqualityProblem::new(
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
        )
        .expect("demo data is valid")
    }

    /// Coercivity constant β of the bilinear form: the smallest eigenvalue
    /// of A.
    pub fn coercivity(&self) -> f64 {
        self.a
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solves the saddle system [A Bᵀ; B 0](u, λ) = (F, 0) directly.
pub fn solve_kkt(p: &EqualityProblem) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = p.a.nrows();
    let m = p.b.nrows();
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(&p.a);
    kkt.view_mut((0, n), (n, m)).copy_from(&p.b.transpose());
    kkt.view_mut((n, 0), (m, n)).copy_from(&p.b);
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&p.f);
    let sol = kkt
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMatrix { newton_iter: None })?;
    Ok((
        sol.rows(0, n).into_owned(),
        sol.rows(n, m).into_owned(),
    ))
}

/// Solves the ε-regularized system by Newton:
///   α₁ A u + Bᵀψ = α₁ F + Bᵀψ⁰,
///   B u = ε·ψ/√(1 + |ψ|²),
/// with the ball map applied to the constraint-row vector ψ as a whole.
pub fn solve_regularized(
    p: &EqualityProblem,
    eps: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1)")));
    }
    let n = p.a.nrows();
    let m = p.b.nrows();
    let rhs_u = p.alpha1 * &p.f + p.b.transpose() * &p.psi0;

    let mut u = DVector::<f64>::zeros(n);
    let mut psi = DVector::<f64>::zeros(m);
    for iter in 0..100 {
        let mapped = DVector::from_vec(ball_map(1.0, psi.as_slice()));
        let r_u = p.alpha1 * &p.a * &u + p.b.transpose() * &psi - &rhs_u;
        let r_c = &p.b * &u - eps * &mapped;
        let rnorm = (r_u.norm_squared() + r_c.norm_squared()).sqrt();
        if rnorm <= 1e-12 * (1.0 + rhs_u.norm()) {
            return Ok((u, psi));
        }
        let jac_map = ball_map_jacobian(1.0, psi.as_slice());
        let mut jac = DMatrix::zeros(n + m, n + m);
        jac.view_mut((0, 0), (n, n)).copy_from(&(p.alpha1 * &p.a));
        jac.view_mut((0, n), (n, m)).copy_from(&p.b.transpose());
        jac.view_mut((n, 0), (m, n)).copy_from(&p.b);
        for i in 0..m {
            for j in 0..m {
                jac[(n + i, n + j)] = -eps * jac_map[i * m + j];
            }
        }
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&r_u));
        rhs.rows_mut(n, m).copy_from(&(-&r_c));
        let delta = jac.lu().solve(&rhs).ok_or(Error::SingularMatrix {
            newton_iter: Some(iter + 1),
        })?;
        u += delta.rows(0, n);
        psi += delta.rows(n, m);
    }
    Err(Error::Divergence(
        "regularized equality solve did not converge in 100 Newton iterations".into(),
    ))
}

/// One row of an ε-sweep.
#[derive(Debug, Clone)]
pub struct EpsSweepRow {
    pub eps: f64,
    pub err_u: f64,
    pub constraint_norm: f64,
    pub lambda_err: f64,
    pub apriori_ok: bool,
}

/// Sweeps ε over decades and reports convergence toward the KKT solution,
/// the constraint residual bound ‖Bu_ε‖ ≤ ε, and the a-priori bound
/// β‖u_ε‖ ≤ ‖F‖ + α₁⁻¹‖Bᵀψ⁰‖.
pub fn eps_sweep(p: &EqualityProblem, eps_values: &[f64]) -> Result<Vec<EpsSweepRow>> {
    let (u_kkt, lambda_kkt) = solve_kkt(p)?;
    let beta = p.coercivity();
    let bound = p.f.norm() + (p.b.transpose() * &p.psi0).norm() / p.alpha1;
    let mut rows = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let (u, psi) = solve_regularized(p, eps)?;
        let lambda = (&psi - &p.psi0) / p.alpha1;
        rows.push(EpsSweepRow {
            eps,
            err_u: (&u - &u_kkt).norm(),
            constraint_norm: (&p.b * &u).norm(),
            lambda_err: (&lambda - &lambda_kkt).norm(),
            apriori_ok: beta * u.norm() <= bound + 1e-12,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kkt_hand_solved_example() {
        let p = EqualityProblem::demo();
        let (u, lambda) = solve_kkt(&p).unwrap();
        assert_relative_eq!(u[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(u[1], -0.5, max_relative = 1e-14);
        assert_relative_eq!(lambda[0], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn kkt_zero_functional_gives_zero() {
        let p = EqualityProblem::new(
            DMatrix::identity(3, 3),
            DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]),
            DVector::zeros(3),
        )
        .unwrap();
        let (u, lambda) = solve_kkt(&p).unwrap();
        assert!(u.norm() < 1e-14);
        assert!(lambda.norm() < 1e-14);
    }

    #[test]
    fn kkt_square_invertible_constraint_forces_zero() {
        // B square invertible: ker B = {0}, so u = 0 and λ = B⁻ᵀ F
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let f = DVector::from_column_slice(&[1.0, 3.0]);
        let p = EqualityProblem::new(DMatrix::identity(2, 2), b.clone(), f.clone()).unwrap();
        let (u, lambda) = solve_kkt(&p).unwrap();
        assert!(u.norm() < 1e-13, "u = {u}");
        let expected = b.transpose().lu().solve(&f).unwrap();
        assert_relative_eq!(lambda[0], expected[0], max_relative = 1e-13);
        assert_relative_eq!(lambda[1], expected[1], max_relative = 1e-13);
    }

    #[test]
    fn rank_deficient_constraint_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(EqualityProblem::new(
            DMatrix::identity(2, 2),
            b,
            DVector::zeros(2)
        )
        .is_err());
    }

    #[test]
    fn asymmetric_a_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(EqualityProblem::new(
            a,
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::zeros(2)
        )
        .is_err());
    }

    #[test]
    fn regularized_limit_recovers_kkt_pair() {
        let p = EqualityProblem::demo();
        let mut prev_err = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let (u, psi) = solve_regularized(&p, eps).unwrap();
            let err = (u - DVector::from_column_slice(&[0.5, -0.5])).norm();
            assert!(err < prev_err + 1e-15, "error not decreasing at eps {eps}");
            prev_err = err;
            // |ψ/√(1+ψ²)| < 1 makes the constraint residual at most ε
            let bu = (&p.b
                * solve_regularized(&p, eps).unwrap().0)
                .norm();
            assert!(bu <= eps, "‖Bu‖ = {bu} > eps = {eps}");
            let lambda = (psi - &p.psi0) / p.alpha1;
            if eps <= 1e-4 {
                assert!((lambda[0] - 0.5).abs() < 1e-2, "lambda = {}", lambda[0]);
            }
        }
        assert!(prev_err < 1e-5);
    }

    #[test]
    fn monotone_operator_inequality_along_sweep() {
        let p = EqualityProblem::demo();
        for eps in [1e-1, 1e-3, 1e-5] {
            let (u, psi) = solve_regularized(&p, eps).unwrap();
            let pairing = (&p.b * u).dot(&psi);
            assert!(pairing >= -1e-14, "(ψ, Bu) = {pairing} < 0");
        }
    }

    #[test]
    fn apriori_bound_holds_across_sweep() {
        let p = EqualityProblem::demo();
        let rows = eps_sweep(&p, &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]).unwrap();
        assert!(rows.iter().all(|r| r.apriori_ok));
        // error decreases monotonically through the sweep
        for w in rows.windows(2) {
            assert!(w[1].err_u <= w[0].err_u + 1e-15);
        }
    }

    #[test]
    fn one_shot_property_with_kkt_stopping_check() {
        // With quadratic J and linear constraints the first proximal iterate
        // already matches the KKT solution up to O(ε).
        let p = EqualityProblem::demo();
        let (u_kkt, _) = solve_kkt(&p).unwrap();
        let (u1, _) = solve_regularized(&p, 1e-6).unwrap();
        assert!(
            (u1 - u_kkt).norm() <= 1e-3,
            "first iterate should pass the KKT stopping check"
        );
    }
}
