use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NodeId, NodeKind, PmTree, RoutingEntry};
use crate::metric::euclidean;

/// Point returned by a range query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeHit {
    pub slot: usize,
    pub id: usize,
    /// Projected distance to the query.
    pub dist: f64,
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Node {
        id: NodeId,
        /// Query distance to this node's center, once computed.
        center_q: Option<f64>,
    },
    Point {
        slot: usize,
        dist: Option<f64>,
    },
}

/// Heap entry ordered by lower bound, then by insertion order.
#[derive(Debug, Clone, Copy)]
struct Queued {
    lb: f64,
    seq: u64,
    item: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other.lb.total_cmp(&self.lb).then(other.seq.cmp(&self.seq))
    }
}

/// Incremental best-first range query.
///
/// Pending nodes and points sit in one queue keyed by a lower bound of
/// their distance to the query, so nodes are expanded nearest-first and a
/// budget-limited run collects the points of the closest regions. Items
/// whose bound exceeds the current radius stay queued, which lets
/// [`RangeCursor::enlarge`] resume at a larger radius without revisiting
/// anything already reported.
pub struct RangeCursor<'t> {
    tree: &'t PmTree,
    query: Vec<f64>,
    query_pivots: Vec<f64>,
    radius: f64,
    queue: BinaryHeap<Queued>,
    seq: u64,
    distance_computations: usize,
}

fn slack(radius: f64) -> f64 {
    radius + 1e-9 * (1.0 + radius)
}

impl<'t> RangeCursor<'t> {
    pub fn new(tree: &'t PmTree, query: &[f64], radius: f64) -> Self {
        assert_eq!(query.len(), tree.dim(), "query dimension");
        let query_pivots = tree
            .pivots
            .coords
            .iter()
            .map(|p| euclidean(query, p))
            .collect();
        let mut cursor = Self {
            tree,
            query: query.to_vec(),
            query_pivots,
            radius,
            queue: BinaryHeap::new(),
            seq: 0,
            distance_computations: 0,
        };
        if let Some(id) = tree.root {
            cursor.push(0.0, Pending::Node { id, center_q: None });
        }
        cursor
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Query-to-center and query-to-point distances computed so far
    /// (the `s` query-to-pivot distances are not included).
    pub fn distance_computations(&self) -> usize {
        self.distance_computations
    }

    /// No pending work at any radius.
    pub fn is_exhausted(&self) -> bool {
        self.queue.is_empty()
    }

    /// Grows the radius; items pruned earlier whose bound now fits become
    /// reachable again.
    pub fn enlarge(&mut self, radius: f64) {
        assert!(radius >= self.radius, "range cursor radius can only grow");
        self.radius = radius;
    }

    /// Processes the pending item with the smallest bound. Returns `false`
    /// once nothing is left at the current radius. A leaf contributes all
    /// its matching points at once.
    pub fn step(&mut self, out: &mut Vec<RangeHit>) -> bool {
        let thr = slack(self.radius);
        match self.queue.peek() {
            Some(q) if q.lb <= thr => {}
            _ => return false,
        }
        let Queued { lb, item, .. } = self.queue.pop().expect("peeked");
        match item {
            Pending::Point { slot, dist } => {
                let d = dist.unwrap_or_else(|| self.point_dist(slot));
                if d <= self.radius {
                    out.push(self.hit(slot, d));
                } else {
                    self.push(
                        d,
                        Pending::Point {
                            slot,
                            dist: Some(d),
                        },
                    );
                }
            }
            Pending::Node { id, center_q } => self.visit_node(id, lb, center_q, out),
        }
        true
    }

    /// Runs until the radius is exhausted or `out` holds at least `budget`
    /// hits (checked between steps, so one leaf may overshoot).
    pub fn run(&mut self, out: &mut Vec<RangeHit>, budget: Option<usize>) {
        while budget.is_none_or(|b| out.len() < b) && self.step(out) {}
    }

    fn push(&mut self, lb: f64, item: Pending) {
        self.seq += 1;
        self.queue.push(Queued {
            lb,
            seq: self.seq,
            item,
        });
    }

    fn hit(&self, slot: usize, dist: f64) -> RangeHit {
        RangeHit {
            slot,
            id: self.tree.ids[slot],
            dist,
        }
    }

    fn point_dist(&mut self, slot: usize) -> f64 {
        self.distance_computations += 1;
        euclidean(&self.query, self.tree.point_coords(slot))
    }

    fn ring_bound(&self, entry: &RoutingEntry) -> f64 {
        entry
            .rings
            .iter()
            .zip(&self.query_pivots)
            .map(|(ring, &q)| (q - ring.max).max(ring.min - q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn visit_node(&mut self, id: NodeId, lb: f64, center_q: Option<f64>, out: &mut Vec<RangeHit>) {
        let tree = self.tree;
        let node = &tree.nodes[id];
        let entry = &node.entry;
        let thr = slack(self.radius);

        let dc = match center_q {
            Some(d) => d,
            None => {
                self.distance_computations += 1;
                euclidean(&self.query, tree.point_coords(entry.center))
            }
        };
        let lb = lb.max(dc - entry.radius);
        let next = self.queue.peek().map_or(f64::INFINITY, |q| q.lb);
        if lb > thr || (center_q.is_none() && lb > next) {
            // no longer the closest candidate: requeue with the tighter bound
            self.push(
                lb,
                Pending::Node {
                    id,
                    center_q: Some(dc),
                },
            );
            return;
        }

        match &node.kind {
            NodeKind::Inner(children) => {
                for &child in children {
                    let ce = &tree.nodes[child].entry;
                    let mut clb = lb.max(self.ring_bound(ce));
                    if let Some(pd) = ce.parent_dist {
                        clb = clb.max((dc - pd).abs() - ce.radius);
                    }
                    self.push(
                        clb,
                        Pending::Node {
                            id: child,
                            center_q: None,
                        },
                    );
                }
            }
            NodeKind::Leaf(entries) => {
                for e in entries {
                    let mut plb = (dc - e.parent_dist).abs();
                    for (&qp, &pp) in self.query_pivots.iter().zip(tree.point_pivot_dists(e.slot)) {
                        plb = plb.max((qp - pp).abs());
                    }
                    if plb > thr {
                        self.push(
                            plb,
                            Pending::Point {
                                slot: e.slot,
                                dist: None,
                            },
                        );
                        continue;
                    }
                    let d = self.point_dist(e.slot);
                    if d <= self.radius {
                        out.push(self.hit(e.slot, d));
                    } else {
                        self.push(
                            d,
                            Pending::Point {
                                slot: e.slot,
                                dist: Some(d),
                            },
                        );
                    }
                }
            }
        }
    }
}

/// Lower bound on the distance between any point under `a` and any point
/// under `b`: the larger of the pivot-ring gaps and the center bound
/// `|ca, cb| - ra - rb`, floored at zero.
pub fn mindist_entries(
    a: &RoutingEntry,
    a_center: &[f64],
    b: &RoutingEntry,
    b_center: &[f64],
) -> f64 {
    let ring_lb = a
        .rings
        .iter()
        .zip(&b.rings)
        .map(|(x, y)| x.gap(y))
        .fold(0.0, f64::max);
    let center_lb = euclidean(a_center, b_center) - a.radius - b.radius;
    ring_lb.max(center_lb).max(0.0)
}

impl PmTree {
    /// All indexed points within projected distance `radius` of `query`.
    /// With a `budget`, stops once at least that many hits were collected.
    pub fn range_query(&self, query: &[f64], radius: f64, budget: Option<usize>) -> Vec<RangeHit> {
        let mut cursor = RangeCursor::new(self, query, radius);
        let mut out = Vec::new();
        cursor.run(&mut out, budget);
        out
    }

    /// [`PmTree::range_query`] plus the number of distance computations spent.
    pub fn range_query_counted(&self, query: &[f64], radius: f64) -> (Vec<RangeHit>, usize) {
        let mut cursor = RangeCursor::new(self, query, radius);
        let mut out = Vec::new();
        cursor.run(&mut out, None);
        (out, cursor.distance_computations())
    }

    pub fn mindist(&self, a: NodeId, b: NodeId) -> f64 {
        mindist_entries(
            &self.nodes[a].entry,
            self.center_coords(a),
            &self.nodes[b].entry,
            self.center_coords(b),
        )
    }

    /// Maximal inner nodes whose radius is below `threshold`, found by
    /// descending from the root through nodes at or above it.
    pub fn find_lca_nodes(&self, threshold: f64) -> Vec<NodeId> {
        let mut out = Vec::new();
        let Some(root) = self.root else { return out };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if let NodeKind::Inner(children) = &node.kind {
                if node.entry.radius < threshold {
                    out.push(id);
                } else {
                    stack.extend(children.iter().rev());
                }
            }
        }
        out
    }
}
