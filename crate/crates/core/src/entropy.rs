//! Legendre function catalog: R, ∇R, ∇R* and the Jacobian of ∇R* for the
//! constraint geometries used by the solvers, plus the Bregman divergence.
//!
//! Each map takes the spatial point as an argument so bounds and radii may
//! vary over the domain; constant bounds are the degenerate case.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Spatial evaluation point. One-dimensional problems use `[x, 0.0]`.
pub type Point = [f64; 2];

type BoundFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Exponential arguments are clamped to this band before evaluation so that
/// no floating-point overflow can occur for any latent input.
pub const EXP_CLAMP: f64 = 700.0;

#[inline]
pub fn exp_clamped(t: f64) -> f64 {
    t.clamp(-EXP_CLAMP, EXP_CLAMP).exp()
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyKind {
    /// Lower bound u ≥ φ₁: generalized Shannon entropy, ∇R*(ψ) = φ₁ + eᵠ.
    ShannonLower,
    /// Upper bound u ≤ φ: sign-flipped Shannon entropy, ∇R*(ψ) = φ − e⁻ᵠ.
    ShannonUpper,
    /// Two-sided bound φ₁ ≤ u ≤ φ₂: Fermi–Dirac entropy (logistic map).
    FermiDirac,
    /// Euclidean-ball bound |a| ≤ φ: Hellinger entropy, ∇R*(ψ) = φψ/√(1+|ψ|²).
    Hellinger,
    /// Gibbs simplex (aᵢ ≥ 0, Σaᵢ = 1): componentwise softmax.
    SimplexEntropy,
}

/// One entry of the Legendre-function catalog, evaluable together with the
/// Jacobian of ∇R*. Immutable after construction; all operations are pure.
#[derive(Clone)]
pub struct LegendreMap {
    kind: EntropyKind,
    phi_lower: Option<BoundFn>,
    phi_upper: Option<BoundFn>,
    radius: Option<BoundFn>,
    dim: usize,
}

impl fmt::Debug for LegendreMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LegendreMap")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Value of a Bregman divergence; +∞ when the first argument leaves dom R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanValue(pub f64);

impl LegendreMap {
    pub fn shannon_lower(phi_lower: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        LegendreMap {
            kind: EntropyKind::ShannonLower,
            phi_lower: Some(Arc::new(phi_lower)),
            phi_upper: None,
            radius: None,
            dim: 1,
        }
    }

    pub fn shannon_upper(phi_upper: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        LegendreMap {
            kind: EntropyKind::ShannonUpper,
            phi_lower: None,
            phi_upper: Some(Arc::new(phi_upper)),
            radius: None,
            dim: 1,
        }
    }

    pub fn fermi_dirac(
        phi_lower: impl Fn(Point) -> f64 + Send + Sync + 'static,
        phi_upper: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        LegendreMap {
            kind: EntropyKind::FermiDirac,
            phi_lower: Some(Arc::new(phi_lower)),
            phi_upper: Some(Arc::new(phi_upper)),
            radius: None,
            dim: 1,
        }
    }

    pub fn hellinger(radius: impl Fn(Point) -> f64 + Send + Sync + 'static, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("Hellinger entropy needs dim >= 1"));
        }
        Ok(LegendreMap {
            kind: EntropyKind::Hellinger,
            phi_lower: None,
            phi_upper: None,
            radius: Some(Arc::new(radius)),
            dim,
        })
    }

    pub fn simplex(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("simplex entropy needs m >= 2 phases"));
        }
        Ok(LegendreMap {
            kind: EntropyKind::SimplexEntropy,
            phi_lower: None,
            phi_upper: None,
            radius: None,
            dim: m,
        })
    }

    pub fn kind(&self) -> EntropyKind {
        self.kind
    }

    /// Vector dimension m of the latent variable.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn lower(&self, x: Point) -> f64 {
        (self.phi_lower.as_ref().expect("kind has lower bound"))(x)
    }

    fn upper(&self, x: Point) -> f64 {
        (self.phi_upper.as_ref().expect("kind has upper bound"))(x)
    }

    fn radius_at(&self, x: Point) -> Result<f64> {
        let r = (self.radius.as_ref().expect("kind has radius"))(x);
        if r <= 0.0 {
            return Err(Error::domain(format!("Hellinger radius {r} <= 0 at {x:?}")));
        }
        Ok(r)
    }

    fn interval_at(&self, x: Point) -> Result<(f64, f64)> {
        let lo = self.lower(x);
        let hi = self.upper(x);
        if lo >= hi {
            return Err(Error::domain(format!(
                "Fermi-Dirac bounds need phi1 < phi2, got [{lo}, {hi}] at {x:?}"
            )));
        }
        Ok((lo, hi))
    }

    /// R(a) via the catalog closed forms, with the convention 0·ln 0 = 0 on
    /// the boundary of dom R; +∞ outside dom R.
    pub fn eval_r(&self, x: Point, a: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        let xlnx = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() };
        match self.kind {
            EntropyKind::ShannonLower => {
                let t = a[0] - self.lower(x);
                if t < 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(xlnx(t) - t)
            }
            EntropyKind::ShannonUpper => {
                let t = self.upper(x) - a[0];
                if t < 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(xlnx(t) - t)
            }
            EntropyKind::FermiDirac => {
                let (lo, hi) = self.interval_at(x)?;
                let (t1, t2) = (a[0] - lo, hi - a[0]);
                if t1 < 0.0 || t2 < 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(xlnx(t1) + xlnx(t2))
            }
            EntropyKind::Hellinger => {
                let phi = self.radius_at(x)?;
                let n2: f64 = a.iter().map(|&t| t * t).sum();
                if n2 > phi * phi {
                    return Ok(f64::INFINITY);
                }
                Ok(-(phi * phi - n2).sqrt())
            }
            EntropyKind::SimplexEntropy => {
                if a.iter().any(|&t| t < 0.0) {
                    return Ok(f64::INFINITY);
                }
                Ok(a.iter().map(|&t| xlnx(t)).sum())
            }
        }
    }

    /// ∇R(a) for a in the interior of dom R; errors on or outside the
    /// boundary, where the gradient blows up.
    ///
    /// For the simplex kind the latent representative is centered
    /// (zero-mean), matching the section of ℝᵐ on which the softmax is
    /// invertible.
    pub fn grad_r(&self, x: Point, a: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(a)?;
        match self.kind {
            EntropyKind::ShannonLower => {
                let t = a[0] - self.lower(x);
                if t <= 0.0 {
                    return Err(Error::domain(format!("a - phi1 = {t} <= 0")));
                }
                Ok(vec![t.ln()])
            }
            EntropyKind::ShannonUpper => {
                let t = self.upper(x) - a[0];
                if t <= 0.0 {
                    return Err(Error::domain(format!("phi - a = {t} <= 0")));
                }
                Ok(vec![-t.ln()])
            }
            EntropyKind::FermiDirac => {
                let (lo, hi) = self.interval_at(x)?;
                let (t1, t2) = (a[0] - lo, hi - a[0]);
                if t1 <= 0.0 || t2 <= 0.0 {
                    return Err(Error::domain(format!(
                        "a = {} not in the open interval ({lo}, {hi})",
                        a[0]
                    )));
                }
                Ok(vec![t1.ln() - t2.ln()])
            }
            EntropyKind::Hellinger => {
                let phi = self.radius_at(x)?;
                let n2: f64 = a.iter().map(|&t| t * t).sum();
                let d2 = phi * phi - n2;
                if d2 <= 0.0 {
                    return Err(Error::domain(format!("|a|^2 = {n2} >= phi^2 = {}", phi * phi)));
                }
                let s = d2.sqrt();
                Ok(a.iter().map(|&t| t / s).collect())
            }
            EntropyKind::SimplexEntropy => {
                if a.iter().any(|&t| t <= 0.0) {
                    return Err(Error::domain("simplex point has a nonpositive entry"));
                }
                let logs: Vec<f64> = a.iter().map(|&t| t.ln()).collect();
                let mean = logs.iter().sum::<f64>() / self.dim as f64;
                Ok(logs.iter().map(|&l| l - mean).collect())
            }
        }
    }

    /// ∇R*(ψ): the catalog inverse-gradient maps. Defined for every real ψ;
    /// the output lies strictly inside the feasible image C.
    pub fn grad_r_star(&self, x: Point, psi: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(psi)?;
        match self.kind {
            EntropyKind::ShannonLower => Ok(vec![self.lower(x) + exp_clamped(psi[0])]),
            EntropyKind::ShannonUpper => Ok(vec![self.upper(x) - exp_clamped(-psi[0])]),
            EntropyKind::FermiDirac => {
                let (lo, hi) = self.interval_at(x)?;
                let s = sigmoid(psi[0]);
                Ok(vec![lo + (hi - lo) * s])
            }
            EntropyKind::Hellinger => {
                let phi = self.radius_at(x)?;
                Ok(ball_map(phi, psi))
            }
            EntropyKind::SimplexEntropy => Ok(softmax(psi)),
        }
    }

    /// Exact Jacobian of ∇R* at ψ, row-major m×m. Symmetric positive
    /// semidefinite (it is the Hessian of the convex conjugate R*).
    pub fn jac_grad_r_star(&self, x: Point, psi: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(psi)?;
        match self.kind {
            EntropyKind::ShannonLower => Ok(vec![exp_clamped(psi[0])]),
            EntropyKind::ShannonUpper => Ok(vec![exp_clamped(-psi[0])]),
            EntropyKind::FermiDirac => {
                let (lo, hi) = self.interval_at(x)?;
                let s = sigmoid(psi[0]);
                Ok(vec![(hi - lo) * s * (1.0 - s)])
            }
            EntropyKind::Hellinger => {
                let phi = self.radius_at(x)?;
                Ok(ball_map_jacobian(phi, psi))
            }
            EntropyKind::SimplexEntropy => {
                let s = softmax(psi);
                let m = self.dim;
                let mut jac = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        jac[i * m + j] = if i == j { s[i] * (1.0 - s[i]) } else { -s[i] * s[j] };
                    }
                }
                Ok(jac)
            }
        }
    }

    /// Bregman divergence D_R(a, b) = R(a) − R(b) − ∇R(b)·(a − b).
    ///
    /// Requires b in the interior of dom R; returns +∞ when a leaves dom R.
    pub fn bregman(&self, x: Point, a: &[f64], b: &[f64]) -> Result<BregmanValue> {
        self.check_dim(a)?;
        let grad_b = self.grad_r(x, b)?;
        let ra = self.eval_r(x, a)?;
        if ra == f64::INFINITY {
            return Ok(BregmanValue(f64::INFINITY));
        }
        let rb = self.eval_r(x, b)?;
        let cross: f64 = grad_b
            .iter()
            .zip(a.iter().zip(b.iter()))
            .map(|(&g, (&ai, &bi))| g * (ai - bi))
            .sum();
        Ok(BregmanValue(ra - rb - cross))
    }

    /// Distance of ∇R*(ψ) to the boundary of C, evaluated through stable
    /// closed forms. This is the by-construction witness of strict
    /// feasibility: it stays positive even where the recovered value itself
    /// saturates to the bound in floating point.
    pub fn feasibility_margin(&self, x: Point, psi: &[f64]) -> Result<f64> {
        self.check_dim(psi)?;
        match self.kind {
            EntropyKind::ShannonLower => Ok(exp_clamped(psi[0])),
            EntropyKind::ShannonUpper => Ok(exp_clamped(-psi[0])),
            EntropyKind::FermiDirac => {
                let (lo, hi) = self.interval_at(x)?;
                // min(σ(ψ), 1 − σ(ψ)) = σ(−|ψ|); the clamp keeps the witness
                // above the underflow threshold
                Ok((hi - lo) * sigmoid(-psi[0].abs().min(EXP_CLAMP)))
            }
            EntropyKind::Hellinger => {
                let phi = self.radius_at(x)?;
                Ok(ball_margin(phi, psi))
            }
            EntropyKind::SimplexEntropy => {
                Ok(softmax(psi).into_iter().fold(f64::INFINITY, f64::min))
            }
        }
    }

    /// Scalar convenience for the m = 1 kinds.
    pub fn grad_r_star_scalar(&self, x: Point, psi: f64) -> Result<f64> {
        Ok(self.grad_r_star(x, &[psi])?[0])
    }

    /// Scalar convenience for the m = 1 kinds.
    pub fn jac_grad_r_star_scalar(&self, x: Point, psi: f64) -> Result<f64> {
        Ok(self.jac_grad_r_star(x, &[psi])?[0])
    }
}

/// φψ/√(1+|ψ|²), stable for arbitrarily large |ψ|.
pub fn ball_map(phi: f64, psi: &[f64]) -> Vec<f64> {
    let n2: f64 = psi.iter().map(|&t| t * t).sum();
    if n2.is_finite() {
        let d = (1.0 + n2).sqrt();
        psi.iter().map(|&t| phi * t / d).collect()
    } else {
        // |ψ|² overflowed; rescale by the largest component first
        let m = psi.iter().map(|&t| t.abs()).fold(0.0f64, f64::max);
        let scaled: Vec<f64> = psi.iter().map(|&t| t / m).collect();
        let norm = scaled.iter().map(|t| t * t).sum::<f64>().sqrt();
        scaled.into_iter().map(|t| phi * t / norm).collect()
    }
}

/// Stable distance of the ball map's output to the sphere of radius φ:
/// φ − φ|ψ|/√(1+|ψ|²) = φ / (√(1+|ψ|²)(√(1+|ψ|²) + |ψ|)).
pub fn ball_margin(phi: f64, psi: &[f64]) -> f64 {
    let n2: f64 = psi.iter().map(|&t| t * t).sum();
    if !n2.is_finite() {
        return 0.0;
    }
    let d = (1.0 + n2).sqrt();
    phi / (d * (d + n2.sqrt()))
}

/// Row-major Jacobian of the ball map: φ(1+|ψ|²)^{-1/2}(I − ψψᵀ/(1+|ψ|²)).
pub fn ball_map_jacobian(phi: f64, psi: &[f64]) -> Vec<f64> {
    let m = psi.len();
    let n2: f64 = psi.iter().map(|&t| t * t).sum();
    let d = (1.0 + n2).sqrt();
    let mut jac = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let kron = if i == j { 1.0 } else { 0.0 };
            jac[i * m + j] = phi / d * (kron - psi[i] * psi[j] / (1.0 + n2));
        }
    }
    jac
}

/// Max-shifted softmax; components are strictly positive and sum to one.
pub fn softmax(psi: &[f64]) -> Vec<f64> {
    let max = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = psi.iter().map(|&t| exp_clamped(t - max)).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant(c: f64) -> impl Fn(Point) -> f64 + Send + Sync + 'static {
        move |_| c
    }

    const ORIGIN: Point = [0.0, 0.0];

    #[test]
    fn shannon_lower_closed_forms() {
        let map = LegendreMap::shannon_lower(constant(0.0));
        assert_relative_eq!(map.eval_r(ORIGIN, &[1.0]).unwrap(), -1.0);
        assert_relative_eq!(map.grad_r(ORIGIN, &[1.0]).unwrap()[0], 0.0);
        assert_relative_eq!(map.grad_r_star(ORIGIN, &[0.0]).unwrap()[0], 1.0);
        assert_relative_eq!(map.jac_grad_r_star(ORIGIN, &[0.0]).unwrap()[0], 1.0);
        // boundary convention 0 ln 0 = 0
        assert_relative_eq!(map.eval_r(ORIGIN, &[0.0]).unwrap(), 0.0);
        assert_eq!(map.eval_r(ORIGIN, &[-0.5]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn fermi_dirac_closed_forms() {
        let map = LegendreMap::fermi_dirac(constant(0.0), constant(1.0));
        assert_relative_eq!(
            map.eval_r(ORIGIN, &[0.5]).unwrap(),
            -(2.0f64.ln()),
            max_relative = 1e-15
        );
        assert_relative_eq!(map.grad_r(ORIGIN, &[0.5]).unwrap()[0], 0.0);
        assert_relative_eq!(map.grad_r_star(ORIGIN, &[0.0]).unwrap()[0], 0.5);
        assert_relative_eq!(map.jac_grad_r_star(ORIGIN, &[0.0]).unwrap()[0], 0.25);
    }

    #[test]
    fn shannon_upper_is_reflected_shannon() {
        let map = LegendreMap::shannon_upper(constant(2.0));
        // psi = 0 -> 2 - 1 = 1
        assert_relative_eq!(map.grad_r_star(ORIGIN, &[0.0]).unwrap()[0], 1.0);
        // round trip
        let a = map.grad_r_star(ORIGIN, &[1.75]).unwrap();
        assert_relative_eq!(map.grad_r(ORIGIN, &a).unwrap()[0], 1.75, max_relative = 1e-13);
        // output strictly below the bound for very negative psi
        let far = map.grad_r_star(ORIGIN, &[-1e9]).unwrap()[0];
        assert!(far < 2.0);
    }

    #[test]
    fn hellinger_closed_forms() {
        let map = LegendreMap::hellinger(constant(1.0), 2).unwrap();
        assert_relative_eq!(map.eval_r(ORIGIN, &[0.0, 0.0]).unwrap(), -1.0);
        let g = map.grad_r(ORIGIN, &[0.6, 0.0]).unwrap();
        assert_relative_eq!(g[0], 0.75, max_relative = 1e-15);
        assert_relative_eq!(g[1], 0.0);
        let v = map.grad_r_star(ORIGIN, &[3.0, 4.0]).unwrap();
        let d = 26.0f64.sqrt();
        assert_relative_eq!(v[0], 3.0 / d, max_relative = 1e-15);
        assert_relative_eq!(v[1], 4.0 / d, max_relative = 1e-15);
        let jac = map.jac_grad_r_star(ORIGIN, &[0.0, 0.0]).unwrap();
        assert_eq!(jac, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn simplex_uniform_at_zero() {
        let map = LegendreMap::simplex(4).unwrap();
        let s = map.grad_r_star(ORIGIN, &[0.0; 4]).unwrap();
        for &v in &s {
            assert_relative_eq!(v, 0.25);
        }
    }

    #[test]
    fn bregman_hand_values() {
        let shannon = LegendreMap::shannon_lower(constant(0.0));
        let d = shannon.bregman(ORIGIN, &[1.0], &[std::f64::consts::E]).unwrap();
        assert_relative_eq!(d.0, std::f64::consts::E - 2.0, max_relative = 1e-14);

        let hell = LegendreMap::hellinger(constant(1.0), 2).unwrap();
        let d = hell.bregman(ORIGIN, &[0.0, 0.0], &[0.6, 0.0]).unwrap();
        assert_relative_eq!(d.0, 0.25, max_relative = 1e-14);

        // coincident arguments
        let d = hell.bregman(ORIGIN, &[0.3, 0.1], &[0.3, 0.1]).unwrap();
        assert_relative_eq!(d.0, 0.0);
    }

    #[test]
    fn bregman_infinite_outside_domain() {
        let map = LegendreMap::shannon_lower(constant(0.0));
        let d = map.bregman(ORIGIN, &[-1.0], &[1.0]).unwrap();
        assert_eq!(d.0, f64::INFINITY);
        // interior-point requirement on b
        assert!(map.bregman(ORIGIN, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let map = LegendreMap::hellinger(constant(1.0), 2).unwrap();
        assert!(matches!(
            map.grad_r_star(ORIGIN, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(map.eval_r(ORIGIN, &[0.0; 3]).is_err());
    }

    #[test]
    fn point_dependent_bounds() {
        let map = LegendreMap::hellinger(|x: Point| 0.1 + 0.2 * x[0] + 0.4 * x[1], 2).unwrap();
        let x = [0.5, 0.5];
        let v = map.grad_r_star(x, &[1e6, 0.0]).unwrap();
        let phi = 0.4;
        assert!(v[0] < phi && v[0] > 0.99 * phi);
        assert!(map.feasibility_margin(x, &[1e6, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn saturation_keeps_everything_finite() {
        let map = LegendreMap::shannon_lower(constant(0.0));
        let v = map.grad_r_star(ORIGIN, &[1e9]).unwrap()[0];
        assert!(v.is_finite());
        let w = map.grad_r_star(ORIGIN, &[-1e9]).unwrap()[0];
        assert!(w > 0.0, "strictly feasible even at extreme latent values");

        let ball = LegendreMap::hellinger(constant(1.0), 2).unwrap();
        let v = ball.grad_r_star(ORIGIN, &[1e200, 1e200]).unwrap();
        assert!(v.iter().all(|t| t.is_finite()));
        let n: f64 = v.iter().map(|t| t * t).sum::<f64>();
        assert!(n <= 1.0 + 1e-14);
        // margins stay positive long after the values saturate
        assert!(ball.feasibility_margin(ORIGIN, &[1e100, 0.0]).unwrap() > 0.0);
        let fd = LegendreMap::fermi_dirac(constant(-1.0), constant(1.0));
        assert!(fd.feasibility_margin(ORIGIN, &[500.0]).unwrap() > 0.0);
        assert!(fd.feasibility_margin(ORIGIN, &[-500.0]).unwrap() > 0.0);
    }
}
