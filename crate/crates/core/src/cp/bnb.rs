use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{PairResult, PairVerifier};
use crate::data::{Dataset, PairNeighbor};
use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::pmtree::{NodeId, PmTree};
use crate::topk::{Ranked, TopK};

/// The `t` pairs with the smallest projected distance, exactly, ascending.
///
/// Best-first search over same-level node pairs keyed by Mindist; a popped
/// pair whose Mindist exceeds the current `t`-th smallest distance ends the
/// search. Each unordered node pair is enqueued once.
pub fn projected_closest_pairs(tree: &PmTree, t: usize) -> Vec<PairNeighbor> {
    let Some(root) = tree.root() else {
        return Vec::new();
    };
    let mut best: TopK<(usize, usize)> = TopK::new(t);
    let mut queue: BinaryHeap<Reverse<Ranked<(NodeId, NodeId)>>> = BinaryHeap::new();
    queue.push(Reverse(Ranked {
        dist: 0.0,
        item: (root, root),
    }));

    while let Some(Reverse(Ranked { dist, item: (x, y) })) = queue.pop() {
        if dist > best.threshold() {
            break;
        }
        let (nx, ny) = (tree.node(x), tree.node(y));
        if nx.is_leaf() && ny.is_leaf() {
            let (ex, ey) = (nx.leaf_entries(), ny.leaf_entries());
            for (i, a) in ex.iter().enumerate() {
                let others = if x == y { &ey[i + 1..] } else { ey };
                for b in others {
                    let d = euclidean(tree.point_coords(a.slot), tree.point_coords(b.slot));
                    best.push(d, (a.slot.min(b.slot), a.slot.max(b.slot)));
                }
            }
            continue;
        }
        let (cx, cy) = (nx.children(), ny.children());
        for (i, &a) in cx.iter().enumerate() {
            let others = if x == y { &cy[i..] } else { cy };
            for &b in others {
                let md = if a == b { 0.0 } else { tree.mindist(a, b) };
                if md <= best.threshold() {
                    queue.push(Reverse(Ranked {
                        dist: md,
                        item: (a, b),
                    }));
                }
            }
        }
    }
    best.into_sorted()
        .into_iter()
        .map(|r| PairNeighbor::new(tree.point_id(r.item.0), tree.point_id(r.item.1), r.dist))
        .collect()
}

/// Closest pairs by verifying the `t` projected-closest pairs and keeping
/// the best `k` in the original space. Requires `k <= t`.
pub fn cp_branch_and_bound(
    tree: &PmTree,
    dataset: &Dataset,
    k: usize,
    t: usize,
) -> Result<PairResult> {
    if t < k {
        return Err(Error::InvalidParameter(format!(
            "candidate budget {t} is below k = {k}"
        )));
    }
    let mut v = PairVerifier::new(tree, dataset, k)?;
    for p in projected_closest_pairs(tree, t) {
        let d = euclidean(dataset.row(p.a), dataset.row(p.b));
        v.verified += 1;
        v.top.push(d, (p.a, p.b));
    }
    let verified = v.verified;
    Ok(PairResult {
        pairs: v.into_pairs(),
        verified,
    })
}
