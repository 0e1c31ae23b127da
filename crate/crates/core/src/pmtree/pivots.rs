use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::squared_euclidean;
use crate::projection::ProjectedPoint;

/// Farthest-first traversal runs over at most this many points.
pub const PIVOT_SAMPLE: usize = 10_000;

/// Default number of global pivots.
pub const DEFAULT_PIVOTS: usize = 5;

/// Global pivots shared by every hyper-ring in a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotSet {
    pub ids: Vec<usize>,
    pub coords: Vec<Vec<f64>>,
}

impl PivotSet {
    pub fn empty() -> Self {
        Self {
            ids: Vec::new(),
            coords: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }
}

/// Farthest-first pivots over a seeded sample of at most [`PIVOT_SAMPLE`]
/// points: the first pivot is the point farthest from the sample centroid,
/// each next one maximizes its minimum distance to the chosen pivots.
pub fn select_pivots(points: &[ProjectedPoint], s: usize, seed: u64) -> Result<PivotSet> {
    if s == 0 {
        return Ok(PivotSet::empty());
    }
    if points.len() < s {
        return Err(Error::InsufficientSample {
            needed: s,
            available: points.len(),
        });
    }
    let sample: Vec<&ProjectedPoint> = if points.len() > PIVOT_SAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, points.len(), PIVOT_SAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &points[i]).collect()
    } else {
        points.iter().collect()
    };
    let m = sample[0].coords.len();

    let mut centroid = vec![0.0; m];
    for p in &sample {
        for (c, v) in centroid.iter_mut().zip(&p.coords) {
            *c += v;
        }
    }
    for c in &mut centroid {
        *c /= sample.len() as f64;
    }

    let argmax = |score: &[f64]| {
        score
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            })
    };

    let to_centroid: Vec<f64> = sample
        .iter()
        .map(|p| squared_euclidean(&p.coords, &centroid))
        .collect();
    let mut chosen = vec![argmax(&to_centroid).0];
    let mut min_dist: Vec<f64> = sample
        .iter()
        .map(|p| squared_euclidean(&p.coords, &sample[chosen[0]].coords))
        .collect();
    while chosen.len() < s {
        let (next, best) = argmax(&min_dist);
        if best <= 0.0 {
            return Err(Error::InsufficientSample {
                needed: s,
                available: chosen.len(),
            });
        }
        chosen.push(next);
        for (md, p) in min_dist.iter_mut().zip(&sample) {
            *md = md.min(squared_euclidean(&p.coords, &sample[next].coords));
        }
    }
    Ok(PivotSet {
        ids: chosen.iter().map(|&i| sample[i].id).collect(),
        coords: chosen.iter().map(|&i| sample[i].coords.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[&[f64]]) -> Vec<ProjectedPoint> {
        coords
            .iter()
            .enumerate()
            .map(|(i, c)| ProjectedPoint::new(i, c.to_vec()))
            .collect()
    }

    #[test]
    fn collinear_picks_extremes() {
        let p = pts(&[&[0.0], &[1.0], &[3.0]]);
        let piv = select_pivots(&p, 2, 0).unwrap();
        let mut ids = piv.ids.clone();
        ids.sort();
        assert_eq!(ids, vec![0, 2]);
    }

    #[test]
    fn single_pivot_is_farthest_from_centroid() {
        let p = pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[5.0, 5.0]]);
        let piv = select_pivots(&p, 1, 0).unwrap();
        assert_eq!(piv.ids, vec![3]);
    }

    #[test]
    fn too_few_points_or_distinct_points() {
        let p = pts(&[&[0.0], &[1.0]]);
        assert!(matches!(
            select_pivots(&p, 3, 0),
            Err(Error::InsufficientSample { .. })
        ));
        let p = pts(&[&[1.0], &[1.0], &[1.0]]);
        assert!(select_pivots(&p, 2, 0).is_err());
        assert!(select_pivots(&p, 0, 0).unwrap().is_empty());
    }
}
