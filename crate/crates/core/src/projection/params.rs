use serde::{Deserialize, Serialize};

use super::chi2::{chi2_cdf, chi2_upper_quantile};
use crate::error::{Error, Result};

/// `1/e`, the default miss probability for true positives.
pub const DEFAULT_ALPHA1: f64 = 0.367_879_441_171_442_33;

/// Constants that drive the NN and CP query engines.
///
/// `t` satisfies both `t^2 = chi2_{alpha1}(m)` and
/// `t^2 = c^2 * chi2_{1 - alpha2}(m)`; `beta = 2 * alpha2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryParams {
    pub m: usize,
    pub c: f64,
    pub alpha1: f64,
    pub t: f64,
    pub alpha2: f64,
    pub beta: f64,
    /// `ceil(beta * n) + k`
    pub t_nn: usize,
    /// `ceil(alpha2 * n * (n - 1)) + k`
    pub t_cp: usize,
}

impl QueryParams {
    pub fn solve(m: usize, c: f64, alpha1: f64, n: usize, k: usize) -> Result<Self> {
        if !(c > 1.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "approximation ratio c = {c} must be > 1"
            )));
        }
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1 and k >= 1 (got n={n}, k={k})"
            )));
        }
        let t_sq = chi2_upper_quantile(alpha1, m)?;
        // c^2 chi2_{1-alpha2}(m) = t^2  <=>  Pr[X < t^2/c^2] = alpha2
        let alpha2 = chi2_cdf(t_sq / (c * c), m);
        let beta = 2.0 * alpha2;
        let nf = n as f64;
        Ok(Self {
            m,
            c,
            alpha1,
            t: t_sq.sqrt(),
            alpha2,
            beta,
            t_nn: (beta * nf).ceil() as usize + k,
            t_cp: (alpha2 * nf * (nf - 1.0)).ceil() as usize + k,
        })
    }

    /// Candidate threshold of the ball-cover query, `ceil(beta * n) + 1`.
    pub fn bc_threshold(&self, n: usize) -> usize {
        (self.beta * n as f64).ceil() as usize + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_defining_equalities_agree() {
        for &c in &[1.1, 1.5, 2.0, 4.0] {
            let p = QueryParams::solve(15, c, DEFAULT_ALPHA1, 10_000, 50).unwrap();
            let lower_q = chi2_upper_quantile(1.0 - p.alpha2, 15).unwrap();
            assert!((c * c * lower_q - p.t * p.t).abs() < 1e-6, "c={c}");
            assert!((p.beta - 2.0 * p.alpha2).abs() < 1e-15);
            assert!(0.0 < p.alpha2 && p.alpha2 < p.beta && p.beta < 1.0);
        }
    }

    #[test]
    fn alpha2_decreases_with_c() {
        let mut prev = 1.0;
        for i in 1..40 {
            let c = 1.0 + 0.05 * i as f64;
            let p = QueryParams::solve(15, c, DEFAULT_ALPHA1, 100, 1).unwrap();
            assert!(p.alpha2 < prev);
            prev = p.alpha2;
        }
        let near_one = QueryParams::solve(15, 1.000_001, DEFAULT_ALPHA1, 100, 1).unwrap();
        assert!((near_one.alpha2 - (1.0 - DEFAULT_ALPHA1)).abs() < 1e-5);
    }

    #[test]
    fn budgets() {
        let p = QueryParams::solve(15, 1.5, DEFAULT_ALPHA1, 10_000, 50).unwrap();
        assert_eq!(p.t_nn, (p.beta * 10_000.0).ceil() as usize + 50);
        assert_eq!(
            p.bc_threshold(10_000),
            (p.beta * 10_000.0).ceil() as usize + 1
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(QueryParams::solve(15, 1.0, DEFAULT_ALPHA1, 10, 1).is_err());
        assert!(QueryParams::solve(15, 1.5, 1.5, 10, 1).is_err());
        assert!(QueryParams::solve(15, 1.5, DEFAULT_ALPHA1, 0, 1).is_err());
    }
}
