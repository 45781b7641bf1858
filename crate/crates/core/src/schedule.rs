//! Update rules for the proximal parameter α_k.

use crate::error::{Error, Result};

/// Guards the Newton-adaptive rule against underflow in pathological runs.
const ALPHA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaRule {
    /// α_k = α₀ for all k.
    Constant,
    /// α_k = min(c·α_{k−1}, C), the conservative capped-geometric growth.
    CappedGeometric,
    /// α_k = min(max(r^(qᵏ) − α_{k−1}, 1), C), the heuristic
    /// double-exponential rule (defaults r = q = 3/2, C = 10², α₀ = 1).
    DoubleExponential,
    /// Doubles α after an easy subproblem (≤ 4 Newton iterations), halves it
    /// after a hard one (≥ 10), otherwise keeps it.
    NewtonAdaptive,
}

/// Proximal-parameter schedule with its state. Single-owner mutable: distinct
/// runs use distinct instances.
#[derive(Debug, Clone)]
pub struct AlphaSchedule {
    rule: AlphaRule,
    alpha0: f64,
    growth_c: f64,
    cap_c: f64,
    r: f64,
    q: f64,
    prev_alpha: f64,
}

impl AlphaSchedule {
    pub fn constant(alpha0: f64) -> Result<Self> {
        Self::new(AlphaRule::Constant, alpha0, 2.0, f64::INFINITY, 1.5, 1.5)
    }

    pub fn capped_geometric(alpha0: f64, growth_c: f64, cap_c: f64) -> Result<Self> {
        Self::new(AlphaRule::CappedGeometric, alpha0, growth_c, cap_c, 1.5, 1.5)
    }

    /// The double-exponential rule with its published defaults.
    pub fn double_exponential_default() -> Self {
        Self::double_exponential(1.0, 1.5, 1.5, 100.0).expect("defaults are valid")
    }

    pub fn double_exponential(alpha0: f64, r: f64, q: f64, cap_c: f64) -> Result<Self> {
        Self::new(AlphaRule::DoubleExponential, alpha0, 2.0, cap_c, r, q)
    }

    pub fn newton_adaptive(alpha0: f64) -> Result<Self> {
        Self::new(AlphaRule::NewtonAdaptive, alpha0, 2.0, f64::INFINITY, 1.5, 1.5)
    }

    pub fn new(
        rule: AlphaRule,
        alpha0: f64,
        growth_c: f64,
        cap_c: f64,
        r: f64,
        q: f64,
    ) -> Result<Self> {
        if alpha0 <= 0.0 {
            return Err(Error::invalid(format!("alpha0 = {alpha0} must be positive")));
        }
        if cap_c <= 0.0 {
            return Err(Error::invalid(format!("cap C = {cap_c} must be positive")));
        }
        if rule == AlphaRule::CappedGeometric && growth_c <= 1.0 {
            return Err(Error::invalid(format!("growth factor c = {growth_c} must exceed 1")));
        }
        if rule == AlphaRule::DoubleExponential && (r <= 1.0 || q <= 1.0) {
            return Err(Error::invalid(format!("double-exponential needs r, q > 1; got r = {r}, q = {q}")));
        }
        Ok(AlphaSchedule {
            rule,
            alpha0,
            growth_c,
            cap_c,
            r,
            q,
            prev_alpha: alpha0,
        })
    }

    pub fn rule(&self) -> AlphaRule {
        self.rule
    }

    /// Emits α_k and advances the internal state. `prev_newton_iters` is the
    /// Newton count of subproblem k−1 (ignored by all rules but
    /// Newton-adaptive; pass 0 at k = 1).
    pub fn next_alpha(&mut self, k: usize, prev_newton_iters: usize) -> Result<f64> {
        if k < 1 {
            return Err(Error::invalid("outer iteration index k starts at 1"));
        }
        let alpha = match self.rule {
            AlphaRule::Constant => self.alpha0,
            AlphaRule::CappedGeometric => {
                if k == 1 {
                    self.alpha0
                } else {
                    (self.growth_c * self.prev_alpha).min(self.cap_c)
                }
            }
            AlphaRule::DoubleExponential => {
                let prev = if k == 1 { self.alpha0 } else { self.prev_alpha };
                let spike = self.r.powf(self.q.powi(k as i32));
                (spike - prev).max(1.0).min(self.cap_c)
            }
            AlphaRule::NewtonAdaptive => {
                if k == 1 {
                    self.alpha0
                } else if prev_newton_iters <= 4 {
                    2.0 * self.prev_alpha
                } else if prev_newton_iters >= 10 {
                    (self.prev_alpha / 2.0).max(ALPHA_FLOOR)
                } else {
                    self.prev_alpha
                }
            }
        };
        debug_assert!(alpha > 0.0);
        self.prev_alpha = alpha;
        Ok(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn double_exponential_first_step_hits_floor() {
        let mut s = AlphaSchedule::double_exponential_default();
        // r^(q^1) − α₀ = 1.5^1.5 − 1 ≈ 0.8371 < 1, so the floor binds.
        assert_relative_eq!(s.next_alpha(1, 0).unwrap(), 1.0);
    }

    #[test]
    fn double_exponential_reaches_cap_and_stays() {
        let mut s = AlphaSchedule::double_exponential_default();
        let mut seq = Vec::new();
        for k in 1..=12 {
            seq.push(s.next_alpha(k, 0).unwrap());
        }
        assert!(seq.iter().any(|&a| a == 100.0), "cap reached: {seq:?}");
        let first_cap = seq.iter().position(|&a| a == 100.0).unwrap();
        assert!(seq[first_cap..].iter().all(|&a| a == 100.0), "stays at cap: {seq:?}");
        assert!(seq.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn capped_geometric_closed_form() {
        let mut s = AlphaSchedule::capped_geometric(1.0, 2.0, 100.0).unwrap();
        let mut prev = 0.0;
        for k in 1..=10 {
            let a = s.next_alpha(k, 0).unwrap();
            let expected = (2.0f64.powi(k as i32 - 1)).min(100.0);
            assert_relative_eq!(a, expected);
            assert!(a >= prev, "nondecreasing");
            assert!(a <= 100.0);
            prev = a;
        }
    }

    #[test]
    fn capped_geometric_cap_binds() {
        let mut s = AlphaSchedule::capped_geometric(80.0, 2.0, 100.0).unwrap();
        s.next_alpha(1, 0).unwrap();
        assert_relative_eq!(s.next_alpha(2, 0).unwrap(), 100.0);
    }

    #[test]
    fn newton_adaptive_moves_by_factor_two_at_most() {
        let mut s = AlphaSchedule::newton_adaptive(0.5).unwrap();
        assert_relative_eq!(s.next_alpha(1, 0).unwrap(), 0.5);
        assert_relative_eq!(s.next_alpha(2, 3).unwrap(), 1.0); // easy -> double
        assert_relative_eq!(s.next_alpha(3, 7).unwrap(), 1.0); // medium -> hold
        assert_relative_eq!(s.next_alpha(4, 12).unwrap(), 0.5); // hard -> halve
    }

    #[test]
    fn newton_adaptive_floor() {
        let mut s = AlphaSchedule::newton_adaptive(1e-8).unwrap();
        s.next_alpha(1, 0).unwrap();
        let a = s.next_alpha(2, 50).unwrap();
        assert!(a >= 1e-8);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(AlphaSchedule::constant(0.0).is_err());
        assert!(AlphaSchedule::capped_geometric(1.0, 1.0, 10.0).is_err());
        assert!(AlphaSchedule::double_exponential(1.0, 0.9, 1.5, 10.0).is_err());
        assert!(AlphaSchedule::new(AlphaRule::Constant, 1.0, 2.0, -1.0, 1.5, 1.5).is_err());
    }

    #[test]
    fn eikonal_rule_as_capped_geometric() {
        // 10·min(2^k, 5) realized as capped geometric growth from 20 to 50.
        let mut s = AlphaSchedule::capped_geometric(20.0, 2.0, 50.0).unwrap();
        let got: Vec<f64> = (1..=5).map(|k| s.next_alpha(k, 0).unwrap()).collect();
        let want: Vec<f64> = (1..=5)
            .map(|k: i32| 10.0 * (2.0f64.powi(k)).min(5.0))
            .collect();
        assert_eq!(got, want);
    }
}
