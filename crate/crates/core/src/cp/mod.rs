//! `(c,k)`-approximate closest-pair search over a PM-tree.
//!
//! Two engines share the same verification plumbing:
//!
//! * [`cp_branch_and_bound`] finds the `T` closest pairs *in the projected
//!   space* exactly, best-first over node pairs ordered by their Mindist,
//!   and verifies them in the original space.
//! * [`cp_radius_filter`] seeds the answer with an intra-leaf self-join and
//!   then scans the maximal nodes of radius below `gamma * t * ub`,
//!   verifying only pairs whose projected distance is below `t * ub`.

mod bnb;
mod gamma;

pub use bnb::{cp_branch_and_bound, projected_closest_pairs};
pub use gamma::{calibrate_gamma, GammaCalibration, DEFAULT_GAMMA_PROB, DEFAULT_GAMMA_SAMPLE};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PairNeighbor};
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::pmtree::{NodeId, NodeKind, PmTree};
use crate::projection::QueryParams;
use crate::topk::TopK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    /// Up to `k` pairs by ascending original distance, ties by ids.
    pub pairs: Vec<PairNeighbor>,
    /// Pairs whose original distance was computed.
    pub verified: usize,
}

/// Outcome of verifying every intra-leaf pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfJoin {
    pub pairs: Vec<PairNeighbor>,
    /// `k`-th smallest verified distance; infinite with fewer than `k` pairs.
    pub ub: f64,
    pub verified: usize,
}

/// Running best-`k` pairs by original distance.
struct PairVerifier<'a> {
    tree: &'a PmTree,
    dataset: &'a Dataset,
    top: TopK<(usize, usize)>,
    verified: usize,
}

impl<'a> PairVerifier<'a> {
    fn new(tree: &'a PmTree, dataset: &'a Dataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if let Some(slot) = (0..tree.len()).find(|&s| tree.point_id(s) >= dataset.len()) {
            return Err(Error::UnknownId(tree.point_id(slot)));
        }
        Ok(Self {
            tree,
            dataset,
            top: TopK::new(k),
            verified: 0,
        })
    }

    fn ub(&self) -> f64 {
        self.top.threshold()
    }

    fn verify_slots(&mut self, a: usize, b: usize) {
        let (ia, ib) = (self.tree.point_id(a), self.tree.point_id(b));
        let d = euclidean(self.dataset.row(ia), self.dataset.row(ib));
        self.verified += 1;
        self.top.push(d, (ia.min(ib), ia.max(ib)));
    }

    fn self_join(&mut self) {
        for leaf in self.tree.leaves() {
            let entries = self.tree.node(leaf).leaf_entries();
            for (i, x) in entries.iter().enumerate() {
                for y in &entries[i + 1..] {
                    self.verify_slots(x.slot, y.slot);
                }
            }
        }
    }

    fn into_pairs(self) -> Vec<PairNeighbor> {
        self.top
            .into_sorted()
            .into_iter()
            .map(|r| PairNeighbor::new(r.item.0, r.item.1, r.dist))
            .collect()
    }
}

/// Verifies every pair of points sharing a leaf and keeps the best `k`.
pub fn leaf_self_join(tree: &PmTree, dataset: &Dataset, k: usize) -> Result<SelfJoin> {
    let mut v = PairVerifier::new(tree, dataset, k)?;
    v.self_join();
    let ub = v.ub();
    let verified = v.verified;
    Ok(SelfJoin {
        pairs: v.into_pairs(),
        ub,
        verified,
    })
}

/// Slot pairs `(a, b)` under `node` whose points lie in different leaves,
/// each exactly once.
///
/// Pairs are grouped by leaf pair; deeper split points come first, so pairs
/// whose lowest common ancestor is small are produced early.
pub fn enumerate_subtree_cross_pairs(
    tree: &PmTree,
    node: NodeId,
) -> impl Iterator<Item = (usize, usize)> + '_ {
    cross_leaf_pairs(tree, node)
        .into_iter()
        .flat_map(move |(la, lb)| {
            let a = tree.node(la).leaf_entries();
            let b = tree.node(lb).leaf_entries();
            a.iter()
                .flat_map(move |x| b.iter().map(move |y| (x.slot, y.slot)))
        })
}

/// Leaf pairs split at `node` or below, post-order.
fn cross_leaf_pairs(tree: &PmTree, node: NodeId) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::new();
    collect_cross_leaf_pairs(tree, node, &mut out);
    out
}

/// Appends the cross pairs of `node`'s subtree and returns its leaves.
fn collect_cross_leaf_pairs(
    tree: &PmTree,
    node: NodeId,
    out: &mut Vec<(NodeId, NodeId)>,
) -> Vec<NodeId> {
    match &tree.node(node).kind {
        NodeKind::Leaf(_) => vec![node],
        NodeKind::Inner(children) => {
            let per_child: Vec<Vec<NodeId>> = children
                .iter()
                .map(|&c| collect_cross_leaf_pairs(tree, c, out))
                .collect();
            for (i, li) in per_child.iter().enumerate() {
                for lj in &per_child[i + 1..] {
                    out.extend(li.iter().flat_map(|&a| lj.iter().map(move |&b| (a, b))));
                }
            }
            per_child.concat()
        }
    }
}

/// Closest pairs by radius filtering.
///
/// After the leaf self-join sets `ub`, the maximal nodes with radius below
/// `R = gamma * t * ub` are scanned in ascending radius (ties by subtree
/// size). A pair is verified when its projected distance is below the
/// current `t * ub`; the scan stops once more than
/// `ceil(alpha2 * n * (n - 1)) + k` pairs, self-join included, have been
/// verified. With fewer than `k` intra-leaf pairs `ub` is infinite and the
/// whole tree is scanned.
pub fn cp_radius_filter(
    tree: &PmTree,
    dataset: &Dataset,
    k: usize,
    params: &QueryParams,
    gamma: f64,
) -> Result<PairResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let mut v = PairVerifier::new(tree, dataset, k)?;
    let n = tree.len() as f64;
    let budget = (params.alpha2 * n * (n - 1.0)).ceil() as usize + k;
    v.self_join();

    let ub = v.ub();
    let big_r = if ub.is_finite() {
        gamma * params.t * ub
    } else {
        f64::INFINITY
    };
    let sizes = tree.subtree_sizes();
    let mut nodes = tree.find_lca_nodes(big_r);
    nodes.sort_by(|&a, &b| {
        tree.node(a)
            .entry
            .radius
            .total_cmp(&tree.node(b).entry.radius)
            .then(sizes[a].cmp(&sizes[b]))
            .then(a.cmp(&b))
    });

    'scan: for e in nodes {
        if v.verified > budget {
            break;
        }
        for (a, b) in enumerate_subtree_cross_pairs(tree, e) {
            let proj = euclidean(tree.point_coords(a), tree.point_coords(b));
            if proj < params.t * v.ub() {
                v.verify_slots(a, b);
                if v.verified > budget {
                    break 'scan;
                }
            }
        }
    }
    let verified = v.verified;
    Ok(PairResult {
        pairs: v.into_pairs(),
        verified,
    })
}
