use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::pmtree::{NodeKind, PivotSet, PmTree, PromotePolicy, TreeConfig};
use crate::projection::HashFamily;

pub const DEFAULT_GAMMA_PROB: f64 = 0.85;
pub const DEFAULT_GAMMA_SAMPLE: usize = 10_000;

/// How many gamma values are kept for inspection.
const RETAINED: usize = 10_000;

/// Histogram bins keyed by the top bits of a positive `f64`; the bit pattern
/// of non-negative floats is monotone in their value.
const BIN_SHIFT: u32 = 44;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCalibration {
    /// Empirical `prob`-quantile of `LCA radius / projected distance`.
    pub gamma: f64,
    pub prob: f64,
    /// Points drawn from the dataset.
    pub sample_size: usize,
    /// Pairs with a positive projected distance.
    pub pairs: usize,
    /// Fraction of those pairs with ratio `<= gamma`.
    pub coverage: f64,
    /// An evenly strided subset of the ratios, in enumeration order.
    pub retained: Vec<f64>,
}

/// Calibrates `gamma` on a throwaway tree built from `sample` random points.
///
/// For every pair of sampled points the ratio between the radius of their
/// lowest common ancestor and their projected distance is computed; pairs
/// sharing a leaf use the leaf's radius and coincident projections are
/// skipped. The quantile is exact over all pairs, found with two passes and
/// a histogram rather than by storing every ratio.
pub fn calibrate_gamma(
    dataset: &Dataset,
    family: &HashFamily,
    capacity: usize,
    policy: PromotePolicy,
    prob: f64,
    sample: usize,
    seed: u64,
) -> Result<GammaCalibration> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!(
            "coverage probability {prob} outside (0, 1)"
        )));
    }
    let take = sample.min(dataset.len());
    if take < 2 {
        return Err(Error::DatasetTooSmall(format!(
            "gamma calibration needs at least 2 sample points, got {take}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = index::sample(&mut rng, dataset.len(), take).into_vec();
    ids.sort_unstable();
    let points = ids
        .iter()
        .map(|&id| family.project(dataset.row(id), id))
        .collect::<Result<Vec<_>>>()?;
    let config = TreeConfig {
        capacity,
        policy,
        seed,
    };
    let tree = PmTree::build(&points, config, PivotSet::empty())?;

    let mut bins = vec![0u64; 1 << (63 - BIN_SHIFT)];
    let mut total = 0usize;
    for_each_ratio(&tree, |g| {
        bins[bin_of(g)] += 1;
        total += 1;
    });
    if total == 0 {
        return Err(Error::DatasetTooSmall(
            "every sampled pair has zero projected distance".into(),
        ));
    }

    let rank = ((prob * total as f64).ceil() as usize).clamp(1, total);
    let mut below = 0usize;
    let mut target = 0;
    for (b, &count) in bins.iter().enumerate() {
        if below + count as usize >= rank {
            target = b;
            break;
        }
        below += count as usize;
    }

    let stride = total.div_ceil(RETAINED);
    let mut in_bin = Vec::new();
    let mut retained = Vec::with_capacity(RETAINED);
    let mut i = 0usize;
    for_each_ratio(&tree, |g| {
        if bin_of(g) == target {
            in_bin.push(g);
        }
        if i.is_multiple_of(stride) {
            retained.push(g);
        }
        i += 1;
    });
    in_bin.sort_by(f64::total_cmp);
    let gamma = in_bin[rank - below - 1];
    let covered = below + in_bin.partition_point(|&g| g <= gamma);
    Ok(GammaCalibration {
        gamma,
        prob,
        sample_size: take,
        pairs: total,
        coverage: covered as f64 / total as f64,
        retained,
    })
}

fn bin_of(g: f64) -> usize {
    (g.to_bits() >> BIN_SHIFT) as usize
}

/// Calls `f` with `LCA radius / projected distance` for every pair with a
/// positive projected distance, in a fixed order.
fn for_each_ratio(tree: &PmTree, mut f: impl FnMut(f64)) {
    let mut ratio = |radius: f64, a: usize, b: usize| {
        let d = euclidean(tree.point_coords(a), tree.point_coords(b));
        if d > 0.0 {
            f(radius / d);
        }
    };
    tree.visit_preorder(|_, node| {
        let radius = node.entry.radius;
        match &node.kind {
            NodeKind::Leaf(entries) => {
                for (i, x) in entries.iter().enumerate() {
                    for y in &entries[i + 1..] {
                        ratio(radius, x.slot, y.slot);
                    }
                }
            }
            NodeKind::Inner(children) => {
                let slots: Vec<Vec<usize>> =
                    children.iter().map(|&c| tree.subtree_slots(c)).collect();
                for (i, si) in slots.iter().enumerate() {
                    for sj in &slots[i + 1..] {
                        for &a in si {
                            for &b in sj {
                                ratio(radius, a, b);
                            }
                        }
                    }
                }
            }
        }
    });
}
