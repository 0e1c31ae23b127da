use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SyntheticKind {
    /// i.i.d. standard normal coordinates.
    Gaussian,
    /// Normal blobs around centers drawn uniformly from `[0, 100]^d`.
    /// Point `i` belongs to blob `i % clusters`.
    Clustered { clusters: usize, spread: f64 },
}

pub fn gen_synthetic(n: usize, d: usize, kind: SyntheticKind, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic data needs n >= 1 and d >= 1 (got n={n}, d={d})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = match kind {
        SyntheticKind::Gaussian => (0..n * d).map(|_| rng.sample(StandardNormal)).collect(),
        SyntheticKind::Clustered { clusters, spread } => {
            if clusters == 0 || !(spread >= 0.0) || !spread.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "clustered data needs clusters >= 1 and spread >= 0 (got {clusters}, {spread})"
                )));
            }
            let centers: Vec<f64> = (0..clusters * d)
                .map(|_| rng.random_range(0.0..100.0))
                .collect();
            let mut data = Vec::with_capacity(n * d);
            for i in 0..n {
                let c = &centers[(i % clusters) * d..(i % clusters + 1) * d];
                for &x in c {
                    let noise: f64 = rng.sample(StandardNormal);
                    data.push(x + spread * noise);
                }
            }
            data
        }
    };
    let name = match kind {
        SyntheticKind::Gaussian => format!("gaussian-{n}x{d}-s{seed}"),
        SyntheticKind::Clustered { clusters, spread } => {
            format!("clustered{clusters}x{spread}-{n}x{d}-s{seed}")
        }
    };
    Dataset::from_flat(name, d, data)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn deterministic() {
        let a = gen_synthetic(100, 10, SyntheticKind::Gaussian, 7).unwrap();
        let b = gen_synthetic(100, 10, SyntheticKind::Gaussian, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_spread_collapses_to_centers() {
        let ds = gen_synthetic(
            50,
            3,
            SyntheticKind::Clustered {
                clusters: 4,
                spread: 0.0,
            },
            1,
        )
        .unwrap();
        let distinct: HashSet<Vec<u64>> = ds
            .rows()
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn gaussian_mean_near_zero() {
        let ds = gen_synthetic(10_000, 2, SyntheticKind::Gaussian, 3).unwrap();
        for j in 0..2 {
            let mean = ds.rows().map(|r| r[j]).sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 0.05, "coordinate {j}: {mean}");
        }
    }

    #[test]
    fn invalid() {
        assert!(gen_synthetic(0, 2, SyntheticKind::Gaussian, 0).is_err());
        assert!(gen_synthetic(5, 0, SyntheticKind::Gaussian, 0).is_err());
        let bad = SyntheticKind::Clustered {
            clusters: 0,
            spread: 1.0,
        };
        assert!(gen_synthetic(5, 2, bad, 0).is_err());
    }
}
