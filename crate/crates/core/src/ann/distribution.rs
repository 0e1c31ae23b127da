use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::projection::ProjectedPoint;

/// Default number of sampled pairs.
pub const DEFAULT_SAMPLE_PAIRS: usize = 100_000;

/// Empirical CDF of pairwise distances, `F(x) = Pr[dist <= x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDistribution {
    sorted: Vec<f64>,
}

impl DistanceDistribution {
    pub fn from_distances(mut distances: Vec<f64>) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::DatasetTooSmall(
                "no distances to build a distribution from".into(),
            ));
        }
        if let Some(bad) = distances.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::Domain(format!("invalid distance {bad}")));
        }
        distances.sort_by(f64::total_cmp);
        Ok(Self { sorted: distances })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }

    /// Fraction of sampled distances `<= x`; 0 below the sample, 1 above it.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Inverse of [`cdf`](Self::cdf), linearly interpolated between order
    /// statistics, so `quantile(cdf(x)) == x` for every sampled `x`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let h = (p.clamp(0.0, 1.0) * n as f64 - 1.0).clamp(0.0, (n - 1) as f64);
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        let w = h - lo as f64;
        self.sorted[lo] + w * (self.sorted[hi] - self.sorted[lo])
    }
}

/// Samples `sample_pairs` distinct unordered pairs uniformly (all pairs if
/// there are fewer) and records their original-space distances.
pub fn build_distance_distribution(
    dataset: &Dataset,
    sample_pairs: usize,
    seed: u64,
) -> Result<DistanceDistribution> {
    sample_distribution(dataset.len(), sample_pairs, seed, |i, j| {
        euclidean(dataset.row(i), dataset.row(j))
    })
}

/// Same as [`build_distance_distribution`], over projected points.
pub fn build_projected_distribution(
    points: &[ProjectedPoint],
    sample_pairs: usize,
    seed: u64,
) -> Result<DistanceDistribution> {
    sample_distribution(points.len(), sample_pairs, seed, |i, j| {
        euclidean(&points[i].coords, &points[j].coords)
    })
}

fn sample_distribution(
    n: usize,
    sample_pairs: usize,
    seed: u64,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<DistanceDistribution> {
    if n < 2 {
        return Err(Error::DatasetTooSmall(format!(
            "need at least 2 points, got {n}"
        )));
    }
    if sample_pairs == 0 {
        return Err(Error::InvalidParameter(
            "sample_pairs must be positive".into(),
        ));
    }
    let total = n * (n - 1) / 2;
    let distances = if sample_pairs >= total {
        (1..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .map(|(i, j)| dist(i, j))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, total, sample_pairs)
            .into_iter()
            .map(|p| {
                let (i, j) = unrank_pair(p);
                dist(i, j)
            })
            .collect()
    };
    DistanceDistribution::from_distances(distances)
}

/// Maps `p` in `0..n(n-1)/2` to the pair `(i, j)`, `i < j`, enumerated
/// column by column: `(0,1), (0,2), (1,2), (0,3), ...`.
fn unrank_pair(p: usize) -> (usize, usize) {
    let mut j = ((1.0 + (1.0 + 8.0 * p as f64).sqrt()) / 2.0) as usize;
    while j * (j - 1) / 2 > p {
        j -= 1;
    }
    while (j + 1) * j / 2 <= p {
        j += 1;
    }
    (p - j * (j - 1) / 2, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticKind};
    use rand::Rng;

    #[test]
    fn two_points() {
        let ds = Dataset::from_rows("two", &[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let f = build_distance_distribution(&ds, 10, 0).unwrap();
        assert_eq!(f.cdf(4.9), 0.0);
        assert_eq!(f.cdf(5.0), 1.0);
        assert_eq!(f.cdf(-1.0), 0.0);
    }

    #[test]
    fn too_small() {
        let ds = Dataset::from_rows("one", &[vec![1.0]]).unwrap();
        assert!(matches!(
            build_distance_distribution(&ds, 10, 0),
            Err(Error::DatasetTooSmall(_))
        ));
    }

    #[test]
    fn unrank_enumerates_all_pairs_in_order() {
        let n = 60;
        let mut p = 0;
        for j in 1..n {
            for i in 0..j {
                assert_eq!(unrank_pair(p), (i, j));
                p += 1;
            }
        }
    }

    #[test]
    fn uniform_line_matches_triangular_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..5_000).map(|_| vec![rng.random::<f64>()]).collect();
        let ds = Dataset::from_rows("line", &rows).unwrap();
        let f = build_distance_distribution(&ds, 100_000, 9).unwrap();
        assert_eq!(f.len(), 100_000);
        let sup = (0..=200)
            .map(|i| {
                let x = i as f64 / 200.0;
                (f.cdf(x) - (2.0 * x - x * x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 0.02, "sup-norm {sup}");
    }

    #[test]
    fn quantile_round_trip_and_monotone() {
        let ds = gen_synthetic(300, 4, SyntheticKind::Gaussian, 1).unwrap();
        let f = build_distance_distribution(&ds, 5_000, 2).unwrap();
        for &x in f.samples().iter().step_by(97) {
            assert!((f.quantile(f.cdf(x)) - x).abs() < 1e-12);
        }
        let mut prev = f.cdf(0.0);
        assert_eq!(prev, 0.0);
        for i in 1..100 {
            let c = f.cdf(f.max() * i as f64 / 99.0);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(f.cdf(f.max()), 1.0);
        assert_eq!(f.quantile(0.0), f.min());
        assert_eq!(f.quantile(1.0), f.max());
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let ds = gen_synthetic(200, 3, SyntheticKind::Gaussian, 1).unwrap();
        let a = build_distance_distribution(&ds, 1_000, 5).unwrap();
        let b = build_distance_distribution(&ds, 1_000, 5).unwrap();
        assert_eq!(a, b);
        // every pair sampled once when asking for more than exist
        let all = build_distance_distribution(&ds, 1_000_000, 5).unwrap();
        assert_eq!(all.len(), 200 * 199 / 2);
    }
}
