//! Ball-cover and `(c,k)`-approximate nearest-neighbor queries.
//!
//! Both engines run a range query of radius `t * r` in the projected space
//! and verify the candidates against the original vectors. The NN engine
//! keeps one [`RangeCursor`] alive across rounds, so each round `r <- c * r`
//! only explores the newly covered shell and no candidate is verified twice.

mod distribution;

pub use distribution::{
    build_distance_distribution, build_projected_distribution, DistanceDistribution,
    DEFAULT_SAMPLE_PAIRS,
};

use serde::{Deserialize, Serialize};

use crate::data::{cmp_neighbor, Dataset, Neighbor};
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::pmtree::{PmTree, RangeCursor, RangeHit};
use crate::projection::{HashFamily, QueryParams};

/// `r_min` is taken this much below the radius whose ball is expected to
/// hold `beta * n + k` points.
pub const RMIN_SHRINK: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnResult {
    /// Up to `k` neighbors by ascending original distance, ties by id.
    pub neighbors: Vec<Neighbor>,
    /// Candidates verified against the original vectors.
    pub probes: usize,
    /// Range-query rounds issued.
    pub rounds: usize,
}

/// Starting radius: `RMIN_SHRINK * F^-1((beta * n + k) / n)`, or the largest
/// sampled distance when that fraction reaches 1.
pub fn select_rmin(dist: &DistanceDistribution, params: &QueryParams, n: usize, k: usize) -> f64 {
    let frac = (params.beta * n as f64 + k as f64) / n.max(1) as f64;
    if frac >= 1.0 {
        return dist.max();
    }
    let r = RMIN_SHRINK * dist.quantile(frac);
    if r > 0.0 {
        return r;
    }
    // a sample dominated by duplicates: fall back to the smallest gap
    dist.samples()
        .iter()
        .find(|&&d| d > 0.0)
        .map_or(f64::MIN_POSITIVE, |d| RMIN_SHRINK * d)
}

/// Exact original-space distances from `q`; repeated ids are verified once.
pub fn verify_candidates(dataset: &Dataset, q: &[f64], ids: &[usize]) -> Result<Vec<Neighbor>> {
    check_query_dim(dataset, q)?;
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let row = dataset.get(id).ok_or(Error::UnknownId(id))?;
        if seen.insert(id) {
            out.push(Neighbor {
                id,
                dist: euclidean(row, q),
            });
        }
    }
    Ok(out)
}

/// `(r,c)`-ball-cover query: some point within `c * r` of `q`, or `None`.
///
/// Collects projected candidates within `t * r`, stopping once
/// `ceil(beta * n) + 1` have been found; in that case the closest of them is
/// returned unconditionally.
pub fn bc_query(
    tree: &PmTree,
    family: &HashFamily,
    dataset: &Dataset,
    q: &[f64],
    r: f64,
    params: &QueryParams,
) -> Result<Option<Neighbor>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball-cover radius must be positive, got {r}"
        )));
    }
    let q_proj = family.hash(q)?;
    let threshold = params.bc_threshold(tree.len());
    let mut cursor = RangeCursor::new(tree, &q_proj, params.t * r);
    let mut hits = Vec::new();
    cursor.run(&mut hits, Some(threshold));
    let found = verify_hits(dataset, q, &hits)?;
    let best = found.into_iter().min_by(cmp_neighbor);
    Ok(if hits.len() >= threshold {
        best
    } else {
        best.filter(|b| b.dist <= params.c * r)
    })
}

/// `(c,k)`-ANN query starting from radius `r_min`.
///
/// Each round first checks whether `k` verified candidates already lie
/// within `c * r`; otherwise the projected search radius grows to `t * r`
/// and candidates are collected until the budget `ceil(beta * n) + k` is
/// met. Asking for more neighbors than are indexed returns all of them.
pub fn ann_query(
    tree: &PmTree,
    family: &HashFamily,
    dataset: &Dataset,
    q: &[f64],
    k: usize,
    params: &QueryParams,
    r_min: f64,
) -> Result<AnnResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(r_min > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "r_min must be positive, got {r_min}"
        )));
    }
    let q_proj = family.hash(q)?;
    check_query_dim(dataset, q)?;
    let budget = (params.beta * tree.len() as f64).ceil() as usize + k;

    let mut cursor = RangeCursor::new(tree, &q_proj, 0.0);
    let mut hits: Vec<RangeHit> = Vec::new();
    let mut verified: Vec<Neighbor> = Vec::new();
    let mut rounds = 0;
    let mut r = r_min;
    loop {
        let within = verified.iter().filter(|v| v.dist <= params.c * r).count();
        if within >= k {
            break;
        }
        rounds += 1;
        cursor.enlarge(params.t * r);
        let before = hits.len();
        cursor.run(&mut hits, Some(budget));
        verified.extend(verify_hits(dataset, q, &hits[before..])?);
        if hits.len() >= budget || cursor.is_exhausted() {
            break;
        }
        r *= params.c;
        if !r.is_finite() {
            // the radius overflowed: the next enlargement covers everything
            r = f64::MAX;
        }
    }
    let probes = verified.len();
    verified.sort_by(cmp_neighbor);
    verified.truncate(k);
    Ok(AnnResult {
        neighbors: verified,
        probes,
        rounds,
    })
}

fn verify_hits(dataset: &Dataset, q: &[f64], hits: &[RangeHit]) -> Result<Vec<Neighbor>> {
    hits.iter()
        .map(|h| {
            let row = dataset.get(h.id).ok_or(Error::UnknownId(h.id))?;
            Ok(Neighbor {
                id: h.id,
                dist: euclidean(row, q),
            })
        })
        .collect()
}

fn check_query_dim(dataset: &Dataset, q: &[f64]) -> Result<()> {
    if q.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            actual: q.len(),
        });
    }
    Ok(())
}
