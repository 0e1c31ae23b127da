//! PM-tree: an M-tree over projected points whose routing entries also
//! carry, per global pivot, the interval of pivot distances of everything
//! stored below them.
//!
//! Nodes live in an arena and are addressed by [`NodeId`]. Every node,
//! the root included, owns its [`RoutingEntry`] (center, covering radius,
//! distance to the parent center and hyper-rings), so node pairs can be
//! compared directly by the closest-pair engines.

mod audit;
mod cost;
mod pivots;
mod query;
mod snapshot;

pub use audit::{AuditReport, TreeStats};
pub use pivots::{select_pivots, PivotSet, DEFAULT_PIVOTS, PIVOT_SAMPLE};
pub use query::{mindist_entries, RangeCursor, RangeHit};
pub use snapshot::IndexSnapshot;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::euclidean;
use crate::projection::ProjectedPoint;

pub type NodeId = usize;

/// Default node capacity.
pub const DEFAULT_CAPACITY: usize = 16;

/// Center selection when an overflowing node is split in two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromotePolicy {
    /// The pair of centers minimizing the sum of the two covering radii.
    #[default]
    MRad,
    /// Two distinct entries chosen uniformly at random.
    Random,
}

impl std::str::FromStr for PromotePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "m_rad" | "mrad" => Ok(PromotePolicy::MRad),
            "random" => Ok(PromotePolicy::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown promote policy {other:?}"
            ))),
        }
    }
}

/// Interval of distances to one pivot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperRing {
    pub min: f64,
    pub max: f64,
}

impl HyperRing {
    pub fn point(d: f64) -> Self {
        Self { min: d, max: d }
    }

    pub fn include(&mut self, d: f64) {
        self.min = self.min.min(d);
        self.max = self.max.max(d);
    }

    pub fn union(&mut self, other: &HyperRing) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    /// Gap between two intervals, 0 when they overlap.
    pub fn gap(&self, other: &HyperRing) -> f64 {
        (other.min - self.max).max(self.min - other.max).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingEntry {
    /// Slot of the center point.
    pub center: usize,
    pub radius: f64,
    /// Distance to the parent's center; `None` at the root.
    pub parent_dist: Option<f64>,
    pub rings: Vec<HyperRing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafEntry {
    pub slot: usize,
    /// Distance to the leaf's center.
    pub parent_dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf(Vec<LeafEntry>),
    Inner(Vec<NodeId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub entry: RoutingEntry,
    pub parent: Option<NodeId>,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(e) => e.len(),
            NodeKind::Inner(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn children(&self) -> &[NodeId] {
        match &self.kind {
            NodeKind::Inner(c) => c,
            NodeKind::Leaf(_) => &[],
        }
    }

    pub fn leaf_entries(&self) -> &[LeafEntry] {
        match &self.kind {
            NodeKind::Leaf(e) => e,
            NodeKind::Inner(_) => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub capacity: usize,
    pub policy: PromotePolicy,
    /// Seeds the RANDOM promote policy.
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            capacity: DEFAULT_CAPACITY,
            policy: PromotePolicy::MRad,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PmTree {
    dim: usize,
    config: TreeConfig,
    pivots: PivotSet,
    ids: Vec<usize>,
    coords: Vec<f64>,
    pivot_dists: Vec<f64>,
    nodes: Vec<Node>,
    root: Option<NodeId>,
    rng: ChaCha8Rng,
}

/// One member of a node being split: a leaf point or a child node.
struct SplitItem {
    center: usize,
    extent: f64,
    payload: SplitPayload,
}

enum SplitPayload {
    Point,
    Child(NodeId),
}

impl PmTree {
    pub fn new(dim: usize, config: TreeConfig, pivots: PivotSet) -> Result<Self> {
        if config.capacity < 2 {
            return Err(Error::InvalidParameter(format!(
                "node capacity must be >= 2 (got {})",
                config.capacity
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "projected dimension must be >= 1".into(),
            ));
        }
        if let Some(p) = pivots.coords.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        Ok(Self {
            dim,
            config,
            pivots,
            ids: Vec::new(),
            coords: Vec::new(),
            pivot_dists: Vec::new(),
            nodes: Vec::new(),
            root: None,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Inserts `points` one by one in the given order.
    pub fn build(points: &[ProjectedPoint], config: TreeConfig, pivots: PivotSet) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.dim())
            .or_else(|| pivots.coords.first().map(Vec::len))
            .unwrap_or(1);
        let mut tree = Self::new(dim, config, pivots)?;
        for p in points {
            tree.insert(p)?;
        }
        Ok(tree)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> TreeConfig {
        self.config
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn pivots(&self) -> &PivotSet {
        &self.pivots
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// External id of the point in `slot`.
    pub fn point_id(&self, slot: usize) -> usize {
        self.ids[slot]
    }

    pub fn point_coords(&self, slot: usize) -> &[f64] {
        &self.coords[slot * self.dim..(slot + 1) * self.dim]
    }

    pub fn point_pivot_dists(&self, slot: usize) -> &[f64] {
        let s = self.pivots.len();
        &self.pivot_dists[slot * s..(slot + 1) * s]
    }

    pub fn center_coords(&self, node: NodeId) -> &[f64] {
        self.point_coords(self.nodes[node].entry.center)
    }

    pub fn dist_slots(&self, a: usize, b: usize) -> f64 {
        euclidean(self.point_coords(a), self.point_coords(b))
    }

    /// Leaves only, in depth-first order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        self.visit_preorder(|id, node| {
            if node.is_leaf() {
                out.push(id);
            }
        });
        out
    }

    /// Preorder walk from the root; children in stored order.
    pub fn visit_preorder(&self, mut f: impl FnMut(NodeId, &Node)) {
        let Some(root) = self.root else { return };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            f(id, node);
            stack.extend(node.children().iter().rev());
        }
    }

    /// Slots stored under `node`.
    pub fn subtree_slots(&self, node: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(id) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Leaf(entries) => out.extend(entries.iter().map(|e| e.slot)),
                NodeKind::Inner(children) => stack.extend(children.iter().rev()),
            }
        }
        out
    }

    /// Number of points stored under every node, indexed by [`NodeId`].
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.nodes.len()];
        let mut order = Vec::with_capacity(self.nodes.len());
        self.visit_preorder(|id, _| order.push(id));
        for &id in order.iter().rev() {
            sizes[id] = match &self.nodes[id].kind {
                NodeKind::Leaf(e) => e.len(),
                NodeKind::Inner(c) => c.iter().map(|&c| sizes[c]).sum(),
            };
        }
        sizes
    }

    fn pivot_dists_of(&self, coords: &[f64]) -> Vec<f64> {
        self.pivots
            .coords
            .iter()
            .map(|p| euclidean(coords, p))
            .collect()
    }

    fn rings_of_slot(&self, slot: usize) -> Vec<HyperRing> {
        self.point_pivot_dists(slot)
            .iter()
            .map(|&d| HyperRing::point(d))
            .collect()
    }

    pub fn insert(&mut self, point: &ProjectedPoint) -> Result<()> {
        if point.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: point.dim(),
            });
        }
        if point.coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "point {} has non-finite coordinates",
                point.id
            )));
        }
        let slot = self.ids.len();
        self.ids.push(point.id);
        self.coords.extend_from_slice(&point.coords);
        let pd = self.pivot_dists_of(&point.coords);
        self.pivot_dists.extend_from_slice(&pd);

        let Some(root) = self.root else {
            self.nodes.push(Node {
                entry: RoutingEntry {
                    center: slot,
                    radius: 0.0,
                    parent_dist: None,
                    rings: self.rings_of_slot(slot),
                },
                parent: None,
                kind: NodeKind::Leaf(vec![LeafEntry {
                    slot,
                    parent_dist: 0.0,
                }]),
            });
            self.root = Some(self.nodes.len() - 1);
            return Ok(());
        };

        let mut current = root;
        let mut dist_to_center = self.dist_slots(slot, self.nodes[root].entry.center);
        loop {
            {
                let entry = &mut self.nodes[current].entry;
                entry.radius = entry.radius.max(dist_to_center);
                for (ring, &d) in entry.rings.iter_mut().zip(&pd) {
                    ring.include(d);
                }
            }
            match &self.nodes[current].kind {
                NodeKind::Leaf(_) => break,
                NodeKind::Inner(children) => {
                    // least radius enlargement, then nearest center
                    let mut best = (usize::MAX, f64::INFINITY, f64::INFINITY);
                    for &c in children {
                        let entry = &self.nodes[c].entry;
                        let d = self.dist_slots(slot, entry.center);
                        let grow = (d - entry.radius).max(0.0);
                        if grow < best.1 || (grow == best.1 && d < best.2) {
                            best = (c, grow, d);
                        }
                    }
                    current = best.0;
                    dist_to_center = best.2;
                }
            }
        }

        if let NodeKind::Leaf(entries) = &mut self.nodes[current].kind {
            entries.push(LeafEntry {
                slot,
                parent_dist: dist_to_center,
            });
        }
        if self.nodes[current].len() > self.config.capacity {
            self.split(current);
        }
        Ok(())
    }

    fn split(&mut self, node_id: NodeId) {
        let items: Vec<SplitItem> = match &self.nodes[node_id].kind {
            NodeKind::Leaf(entries) => entries
                .iter()
                .map(|e| SplitItem {
                    center: e.slot,
                    extent: 0.0,
                    payload: SplitPayload::Point,
                })
                .collect(),
            NodeKind::Inner(children) => children
                .iter()
                .map(|&c| SplitItem {
                    center: self.nodes[c].entry.center,
                    extent: self.nodes[c].entry.radius,
                    payload: SplitPayload::Child(c),
                })
                .collect(),
        };
        let centers: Vec<usize> = items.iter().map(|it| it.center).collect();
        let extents: Vec<f64> = items.iter().map(|it| it.extent).collect();
        let dists = self.distance_matrix(&centers);
        let (a, b) = match self.config.policy {
            PromotePolicy::MRad => promote_min_radii(&dists, &extents).0,
            PromotePolicy::Random => {
                let n = items.len();
                let a = self.rng.random_range(0..n);
                let mut b = self.rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            }
        };
        let side_a = partition(&dists, centers.len(), a, b);

        let was_leaf = self.nodes[node_id].is_leaf();
        let parent = self.nodes[node_id].parent;
        let new_id = self.nodes.len();
        let mut halves = [(node_id, a, Vec::new()), (new_id, b, Vec::new())];
        for (i, item) in items.into_iter().enumerate() {
            let h = if side_a[i] { 0 } else { 1 };
            halves[h].2.push((i, item));
        }

        let mut built = Vec::with_capacity(2);
        for (id, center_idx, members) in halves {
            let center = centers[center_idx];
            let mut radius = 0.0_f64;
            let mut rings: Option<Vec<HyperRing>> = None;
            let mut leaf_entries = Vec::new();
            let mut children = Vec::new();
            for (i, item) in members {
                let d = dists[i * centers.len() + center_idx];
                radius = radius.max(d + item.extent);
                let item_rings = match item.payload {
                    SplitPayload::Point => {
                        leaf_entries.push(LeafEntry {
                            slot: item.center,
                            parent_dist: d,
                        });
                        self.rings_of_slot(item.center)
                    }
                    SplitPayload::Child(c) => {
                        children.push(c);
                        self.nodes[c].parent = Some(id);
                        self.nodes[c].entry.parent_dist = Some(d);
                        self.nodes[c].entry.rings.clone()
                    }
                };
                match &mut rings {
                    None => rings = Some(item_rings),
                    Some(r) => r.iter_mut().zip(&item_rings).for_each(|(x, y)| x.union(y)),
                }
            }
            let kind = if was_leaf {
                NodeKind::Leaf(leaf_entries)
            } else {
                NodeKind::Inner(children)
            };
            built.push(Node {
                entry: RoutingEntry {
                    center,
                    radius,
                    parent_dist: None,
                    rings: rings.unwrap_or_default(),
                },
                parent,
                kind,
            });
        }
        let second = built.pop().expect("two halves");
        let first = built.pop().expect("two halves");
        self.nodes[node_id] = first;
        self.nodes.push(second);

        match parent {
            None => {
                let root_id = self.nodes.len();
                let center = self.nodes[node_id].entry.center;
                let mut rings = self.nodes[node_id].entry.rings.clone();
                rings
                    .iter_mut()
                    .zip(&self.nodes[new_id].entry.rings)
                    .for_each(|(x, y)| x.union(y));
                let mut radius = 0.0_f64;
                for child in [node_id, new_id] {
                    let d = self.dist_slots(center, self.nodes[child].entry.center);
                    self.nodes[child].entry.parent_dist = Some(d);
                    self.nodes[child].parent = Some(root_id);
                    radius = radius.max(d + self.nodes[child].entry.radius);
                }
                self.nodes.push(Node {
                    entry: RoutingEntry {
                        center,
                        radius,
                        parent_dist: None,
                        rings,
                    },
                    parent: None,
                    kind: NodeKind::Inner(vec![node_id, new_id]),
                });
                self.root = Some(root_id);
            }
            Some(p) => {
                let p_center = self.nodes[p].entry.center;
                for child in [node_id, new_id] {
                    let d = self.dist_slots(p_center, self.nodes[child].entry.center);
                    self.nodes[child].entry.parent_dist = Some(d);
                }
                if let NodeKind::Inner(children) = &mut self.nodes[p].kind {
                    let pos = children
                        .iter()
                        .position(|&c| c == node_id)
                        .expect("child of parent");
                    children.insert(pos + 1, new_id);
                }
                if self.nodes[p].len() > self.config.capacity {
                    self.split(p);
                }
            }
        }
    }

    fn distance_matrix(&self, slots: &[usize]) -> Vec<f64> {
        let n = slots.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.dist_slots(slots[i], slots[j]);
                out[i * n + j] = d;
                out[j * n + i] = d;
            }
        }
        out
    }
}

/// `true` for members assigned to center `a`. Each member goes to the nearer
/// center, ties to `a`; the two centers always go to their own side.
fn partition(dists: &[f64], n: usize, a: usize, b: usize) -> Vec<bool> {
    (0..n)
        .map(|i| {
            if i == a {
                true
            } else if i == b {
                false
            } else {
                dists[i * n + a] <= dists[i * n + b]
            }
        })
        .collect()
}

/// Covering radii of halves `a` and `b` under [`partition`].
fn split_radii(dists: &[f64], extents: &[f64], a: usize, b: usize) -> (f64, f64) {
    let n = extents.len();
    let mut ra = 0.0_f64;
    let mut rb = 0.0_f64;
    for i in 0..n {
        let da = dists[i * n + a];
        let db = dists[i * n + b];
        if i == a || (i != b && da <= db) {
            ra = ra.max(da + extents[i]);
        } else {
            rb = rb.max(db + extents[i]);
        }
    }
    (ra, rb)
}

/// Exhaustive m_RAD promotion: returns the center pair with the smallest
/// sum of covering radii and that sum.
fn promote_min_radii(dists: &[f64], extents: &[f64]) -> ((usize, usize), f64) {
    let n = extents.len();
    let mut best = ((0, 1), f64::INFINITY);
    for a in 0..n {
        for b in a + 1..n {
            let (ra, rb) = split_radii(dists, extents, a, b);
            if ra + rb < best.1 {
                best = ((a, b), ra + rb);
            }
        }
    }
    best
}

/// Result of splitting a set of points with a given policy, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub centers: (usize, usize),
    pub radii: (f64, f64),
    pub side_a: Vec<bool>,
}

impl SplitOutcome {
    pub fn radius_sum(&self) -> f64 {
        self.radii.0 + self.radii.1
    }
}

/// Splits `points` (a full leaf plus one) into two groups the way a leaf
/// overflow does. Indices in the outcome refer to positions in `points`.
pub fn split_points(points: &[&[f64]], policy: PromotePolicy, seed: u64) -> Result<SplitOutcome> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "a split needs at least two entries".into(),
        ));
    }
    let n = points.len();
    let mut dists = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(points[i], points[j]);
            dists[i * n + j] = d;
            dists[j * n + i] = d;
        }
    }
    let extents = vec![0.0; n];
    let (a, b) = match policy {
        PromotePolicy::MRad => promote_min_radii(&dists, &extents).0,
        PromotePolicy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        }
    };
    Ok(SplitOutcome {
        centers: (a, b),
        radii: split_radii(&dists, &extents, a, b),
        side_a: partition(&dists, n, a, b),
    })
}
