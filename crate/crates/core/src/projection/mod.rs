//! Gaussian random projection into a low-dimensional space, the projected
//! distance estimator and the solver for the query constants.

pub mod chi2;
mod params;

pub use chi2::{chi2_cdf, chi2_upper_quantile, chi2_upper_tail};
pub use params::{QueryParams, DEFAULT_ALPHA1};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{dot, squared_euclidean};

/// Default number of hash functions.
pub const DEFAULT_M: usize = 15;

/// `m` hash functions `h(o) = a . o` with `a` drawn from `N(0, I_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashFamily {
    m: usize,
    d: usize,
    seed: u64,
    /// Row-major `m x d`.
    vectors: Vec<f64>,
}

impl HashFamily {
    pub fn new(d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidDimension(format!(
                "hash family needs d >= 1 and m >= 1 (got d={d}, m={m})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..m * d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self {
            m,
            d,
            seed,
            vectors,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The `i`-th projection vector.
    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.d)
    }

    /// Projected coordinates of `point`.
    pub fn hash(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: point.len(),
            });
        }
        Ok(self.vectors().map(|a| dot(a, point)).collect())
    }

    pub fn project(&self, point: &[f64], id: usize) -> Result<ProjectedPoint> {
        Ok(ProjectedPoint {
            id,
            coords: self.hash(point)?,
        })
    }
}

/// Image of a data point under a [`HashFamily`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: usize,
    pub coords: Vec<f64>,
}

impl ProjectedPoint {
    pub fn new(id: usize, coords: Vec<f64>) -> Self {
        Self { id, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Unbiased estimate of the squared original distance: `|p1' - p2'|^2 / m`.
pub fn estimate_distance_sq(p1: &ProjectedPoint, p2: &ProjectedPoint, m: usize) -> Result<f64> {
    if p1.dim() != p2.dim() {
        return Err(Error::DimensionMismatch {
            expected: p1.dim(),
            actual: p2.dim(),
        });
    }
    if p1.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: p1.dim(),
        });
    }
    Ok(squared_euclidean(&p1.coords, &p2.coords) / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = HashFamily::new(2, 2, 42).unwrap();
        let b = HashFamily::new(2, 2, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.vectors().flatten().all(|v| v.is_finite()));
        assert_eq!(a.vectors().count(), 2);
        let c = HashFamily::new(2, 2, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn entries_look_standard_normal() {
        let fam = HashFamily::new(192, 15, 9).unwrap();
        let vals: Vec<f64> = fam.vectors().flatten().copied().collect();
        assert_eq!(vals.len(), 2880);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn rejects_zero_dimensions() {
        assert!(matches!(
            HashFamily::new(0, 15, 1),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            HashFamily::new(3, 0, 1),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn projection_is_linear() {
        let fam = HashFamily::new(8, 15, 3).unwrap();
        assert!(fam.hash(&[0.0; 8]).unwrap().iter().all(|&v| v == 0.0));

        let o1: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let o2: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).cos()).collect();
        let diff: Vec<f64> = o1.iter().zip(&o2).map(|(a, b)| a - b).collect();
        let p1 = fam.hash(&o1).unwrap();
        let p2 = fam.hash(&o2).unwrap();
        let pd = fam.hash(&diff).unwrap();
        for i in 0..15 {
            assert!((p1[i] - p2[i] - pd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_naive_loop() {
        let fam = HashFamily::new(5, 15, 11).unwrap();
        let u = [0.6, 0.0, -0.8, 0.0, 0.0];
        let p = fam.project(&u, 7).unwrap();
        assert_eq!(p.id, 7);
        for i in 0..15 {
            let mut acc = 0.0;
            for j in 0..5 {
                acc += fam.vector(i)[j] * u[j];
            }
            assert!((p.coords[i] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let fam = HashFamily::new(5, 4, 11).unwrap();
        assert!(matches!(
            fam.hash(&[1.0; 4]),
            Err(Error::DimensionMismatch {
                expected: 5,
                actual: 4
            })
        ));
        let a = ProjectedPoint::new(0, vec![0.0; 4]);
        let b = ProjectedPoint::new(1, vec![0.0; 3]);
        assert!(estimate_distance_sq(&a, &b, 4).is_err());
        assert_eq!(estimate_distance_sq(&a, &a, 4).unwrap(), 0.0);
    }
}
