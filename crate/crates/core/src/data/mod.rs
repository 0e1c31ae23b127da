//! Datasets, loaders, synthetic generators, exact oracles and quality metrics.

mod gt_cache;
mod io;
mod metrics;
mod oracle;
mod synth;

pub use gt_cache::{GroundTruth, GroundTruthKind};
pub use io::{load_fvecs, load_text, write_fvecs};
pub use metrics::{overall_ratio, recall, recall_pairs, OverallRatio};
pub use oracle::{exact_kcp, exact_knn};
pub use synth::{gen_synthetic, SyntheticKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` points of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    d: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn from_flat(name: impl Into<String>, d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(
                "dataset dimensionality must be >= 1".into(),
            ));
        }
        if !data.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: data.len() % d,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value in row {} column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            name: name.into(),
            d,
            data,
        })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(name, d, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize) -> Option<&[f64]> {
        (i < self.len()).then(|| self.row(i))
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Rows `ids` in the given order, as a new dataset.
    pub fn select(&self, name: impl Into<String>, ids: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.d);
        for &i in ids {
            data.extend_from_slice(self.get(i).ok_or(Error::UnknownId(i))?);
        }
        Ok(Self {
            name: name.into(),
            d: self.d,
            data,
        })
    }
}

/// A point id with its distance to some reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: usize,
    pub dist: f64,
}

/// An unordered point pair (`a < b`) with its distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairNeighbor {
    pub a: usize,
    pub b: usize,
    pub dist: f64,
}

impl PairNeighbor {
    pub fn new(x: usize, y: usize, dist: f64) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Self { a, b, dist }
    }

    pub fn key(&self) -> (usize, usize) {
        (self.a, self.b)
    }
}

/// Total order on (distance, id) used for ranking everywhere.
pub(crate) fn cmp_neighbor(x: &Neighbor, y: &Neighbor) -> std::cmp::Ordering {
    x.dist.total_cmp(&y.dist).then(x.id.cmp(&y.id))
}

#[cfg(test)]
pub(crate) fn cmp_pair(x: &PairNeighbor, y: &PairNeighbor) -> std::cmp::Ordering {
    x.dist.total_cmp(&y.dist).then(x.key().cmp(&y.key()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_select() {
        let ds =
            Dataset::from_rows("t", &[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
        let sub = ds.select("s", &[2, 0]).unwrap();
        assert_eq!(sub.row(0), &[5.0, 6.0]);
        assert!(matches!(ds.select("x", &[3]), Err(Error::UnknownId(3))));
    }

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(Dataset::from_rows("t", &[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::from_flat("t", 2, vec![1.0, f64::NAN]).is_err());
        assert!(Dataset::from_flat("t", 2, vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn pair_canonical_order() {
        let p = PairNeighbor::new(9, 3, 1.0);
        assert_eq!(p.key(), (3, 9));
    }
}
