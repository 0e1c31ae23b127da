use rayon::prelude::*;

use super::{Dataset, Neighbor, PairNeighbor};
use crate::error::{Error, Result};
use crate::metric::squared_euclidean;
use crate::topk::TopK;

/// Exact `k` nearest neighbors by exhaustive scan; ties by ascending id.
pub fn exact_knn(dataset: &Dataset, q: &[f64], k: usize) -> Result<Vec<Neighbor>> {
    if q.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            actual: q.len(),
        });
    }
    if k > dataset.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds dataset size {}",
            dataset.len()
        )));
    }
    let mut top = TopK::new(k);
    for (id, row) in dataset.rows().enumerate() {
        top.push(squared_euclidean(q, row), id);
    }
    Ok(top
        .into_sorted()
        .into_iter()
        .map(|r| Neighbor {
            id: r.item,
            dist: r.dist.sqrt(),
        })
        .collect())
}

/// Exact `k` closest pairs by nested loop; ties by ascending `(a, b)`.
pub fn exact_kcp(dataset: &Dataset, k: usize) -> Result<Vec<PairNeighbor>> {
    let n = dataset.len();
    let pairs = n.saturating_sub(1) * n / 2;
    if k > pairs {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the {pairs} pairs of a {n}-point dataset"
        )));
    }
    let top = (0..n)
        .into_par_iter()
        .fold(
            || TopK::new(k),
            |mut top, i| {
                let a = dataset.row(i);
                for j in i + 1..n {
                    let d = squared_euclidean(a, dataset.row(j));
                    if d <= top.threshold() {
                        top.push(d, (i, j));
                    }
                }
                top
            },
        )
        .reduce(|| TopK::new(k), TopK::merge);
    Ok(top
        .into_sorted()
        .into_iter()
        .map(|r| PairNeighbor::new(r.item.0, r.item.1, r.dist.sqrt()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticKind};
    use crate::metric::euclidean;

    #[test]
    fn self_match() {
        let ds = gen_synthetic(50, 4, SyntheticKind::Gaussian, 1).unwrap();
        let nn = exact_knn(&ds, ds.row(17), 1).unwrap();
        assert_eq!(nn[0].id, 17);
        assert_eq!(nn[0].dist, 0.0);
    }

    #[test]
    fn collinear() {
        let ds = Dataset::from_rows("l", &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let nn = exact_knn(&ds, &[0.0], 3).unwrap();
        assert_eq!(nn.iter().map(|n| n.id).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(exact_knn(&ds, &[0.0], 5).is_err());
    }

    #[test]
    fn knn_matches_sort_based_scan() {
        let ds = gen_synthetic(300, 6, SyntheticKind::Gaussian, 5).unwrap();
        let q = [0.1, -0.2, 0.3, 0.0, 0.5, -1.0];
        let got = exact_knn(&ds, &q, 25).unwrap();
        // independent route: full sort over all rows, reverse iteration order
        let mut all: Vec<(f64, usize)> = (0..ds.len())
            .rev()
            .map(|i| (euclidean(ds.row(i), &q), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (g, e) in got.iter().zip(&all) {
            assert_eq!(g.id, e.1);
            assert!((g.dist - e.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kcp_small_examples() {
        // mutual distances 1, 2, 3
        let ds = Dataset::from_rows("t", &[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let cp = exact_kcp(&ds, 1).unwrap();
        assert_eq!(cp[0].key(), (0, 1));
        assert_eq!(cp[0].dist, 1.0);
        assert!(exact_kcp(&ds, 4).is_err());

        let dup = Dataset::from_rows("d", &[vec![0.0], vec![5.0], vec![9.0], vec![5.0]]).unwrap();
        let cp = exact_kcp(&dup, 2).unwrap();
        assert_eq!(cp[0].key(), (1, 3));
        assert_eq!(cp[0].dist, 0.0);
    }

    #[test]
    fn kcp_permutation_invariant() {
        let ds = gen_synthetic(300, 5, SyntheticKind::Gaussian, 9).unwrap();
        let perm: Vec<usize> = (0..300).map(|i| (i * 7 + 3) % 300).collect();
        let shuffled = ds.select("p", &perm).unwrap();
        let a: Vec<f64> = exact_kcp(&ds, 10).unwrap().iter().map(|p| p.dist).collect();
        let b: Vec<f64> = exact_kcp(&shuffled, 10)
            .unwrap()
            .iter()
            .map(|p| p.dist)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn kcp_matches_full_enumeration() {
        let ds = gen_synthetic(120, 3, SyntheticKind::Gaussian, 2).unwrap();
        let mut all = Vec::new();
        for j in (0..120).rev() {
            for i in 0..j {
                all.push((euclidean(ds.row(i), ds.row(j)), i, j));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let got = exact_kcp(&ds, 30).unwrap();
        for (g, e) in got.iter().zip(&all) {
            assert!((g.dist - e.0).abs() < 1e-12);
        }
    }
}
