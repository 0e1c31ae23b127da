use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::{Neighbor, PairNeighbor};
use crate::error::{Error, Result};

fn tie_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn recall_by<K: Eq + Hash>(result: &[(K, f64)], truth: &[(K, f64)]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let kth = truth.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let truth_ids: HashSet<&K> = truth.iter().map(|t| &t.0).collect();
    let mut seen = HashSet::new();
    let hits = result
        .iter()
        .filter(|(id, dist)| seen.insert(id) && (truth_ids.contains(id) || tie_equal(*dist, kth)))
        .count();
    hits.min(truth.len()) as f64 / truth.len() as f64
}

/// `|R ∩ R*| / |R*|`. A result whose distance equals the `k`-th truth
/// distance also counts, so tie permutations are not penalized.
pub fn recall(result: &[Neighbor], truth: &[Neighbor]) -> f64 {
    let r: Vec<_> = result.iter().map(|n| (n.id, n.dist)).collect();
    let t: Vec<_> = truth.iter().map(|n| (n.id, n.dist)).collect();
    recall_by(&r, &t)
}

/// Recall over unordered id pairs.
pub fn recall_pairs(result: &[PairNeighbor], truth: &[PairNeighbor]) -> f64 {
    let r: Vec<_> = result.iter().map(|p| (p.key(), p.dist)).collect();
    let t: Vec<_> = truth.iter().map(|p| (p.key(), p.dist)).collect();
    recall_by(&r, &t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallRatio {
    /// Mean of the per-position ratios; `inf` if any position is degenerate
    /// with a non-zero result distance.
    pub ratio: f64,
    /// Positions whose truth distance is zero.
    pub degenerate: Vec<usize>,
}

impl OverallRatio {
    pub fn is_finite(&self) -> bool {
        self.ratio.is_finite()
    }
}

/// `(1/k) * Σ result[i] / truth[i]`. A zero truth distance contributes 1
/// when the result distance is also zero and `inf` otherwise; such
/// positions are listed in [`OverallRatio::degenerate`].
pub fn overall_ratio(result: &[f64], truth: &[f64]) -> Result<OverallRatio> {
    if result.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: result.len(),
        });
    }
    if truth.is_empty() {
        return Ok(OverallRatio {
            ratio: 1.0,
            degenerate: Vec::new(),
        });
    }
    let mut degenerate = Vec::new();
    let mut sum = 0.0;
    for (i, (&r, &t)) in result.iter().zip(truth).enumerate() {
        sum += if t > 0.0 {
            r / t
        } else {
            degenerate.push(i);
            if r == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        };
    }
    Ok(OverallRatio {
        ratio: sum / truth.len() as f64,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb(ids: &[usize], dists: &[f64]) -> Vec<Neighbor> {
        ids.iter()
            .zip(dists)
            .map(|(&id, &dist)| Neighbor { id, dist })
            .collect()
    }

    #[test]
    fn recall_cases() {
        let truth = nb(&[1, 2, 3, 4], &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(recall(&truth, &truth), 1.0);
        assert_eq!(
            recall(&nb(&[5, 6, 7, 8], &[5.0, 6.0, 7.0, 8.0]), &truth),
            0.0
        );
        assert_eq!(
            recall(&nb(&[1, 2, 3, 9], &[1.0, 2.0, 3.0, 5.0]), &truth),
            0.75
        );
    }

    #[test]
    fn recall_accepts_kth_ties() {
        let truth = nb(&[1, 2], &[1.0, 2.0]);
        let result = nb(&[1, 7], &[1.0, 2.0]);
        assert_eq!(recall(&result, &truth), 1.0);
        // duplicates in the result are counted once
        let result = nb(&[1, 1], &[1.0, 1.0]);
        assert_eq!(recall(&result, &truth), 0.5);
    }

    #[test]
    fn pair_recall_is_unordered() {
        let truth = vec![PairNeighbor::new(1, 2, 1.0), PairNeighbor::new(3, 4, 2.0)];
        let result = vec![PairNeighbor::new(2, 1, 1.0), PairNeighbor::new(5, 6, 3.0)];
        assert_eq!(recall_pairs(&result, &truth), 0.5);
    }

    #[test]
    fn ratio_cases() {
        assert_eq!(overall_ratio(&[1.0, 2.0], &[1.0, 2.0]).unwrap().ratio, 1.0);
        assert_eq!(overall_ratio(&[1.0, 3.0], &[1.0, 2.0]).unwrap().ratio, 1.25);
        let r = overall_ratio(&[0.0, 2.0], &[0.0, 2.0]).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.degenerate, vec![0]);
        let r = overall_ratio(&[0.5, 2.0], &[0.0, 2.0]).unwrap();
        assert!(!r.is_finite());
        assert!(overall_ratio(&[1.0], &[1.0, 2.0]).is_err());
    }
}
