use serde::{Deserialize, Serialize};

use super::{NodeKind, PmTree};

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub points: usize,
    /// Number of levels; a lone leaf root has height 1.
    pub height: usize,
    pub nodes: usize,
    pub leaves: usize,
    /// Mean entries per node relative to capacity.
    pub mean_fill: f64,
}

/// Outcome of a full structural audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub points: usize,
    pub height: usize,
    pub checked_radii: usize,
    pub checked_rings: usize,
}

impl PmTree {
    pub fn stats(&self) -> TreeStats {
        let mut height = 0;
        let mut nodes = 0;
        let mut leaves = 0;
        let mut entries = 0;
        if let Some(root) = self.root {
            let mut stack = vec![(root, 1)];
            while let Some((id, depth)) = stack.pop() {
                let node = &self.nodes[id];
                nodes += 1;
                entries += node.len();
                height = height.max(depth);
                match &node.kind {
                    NodeKind::Leaf(_) => leaves += 1,
                    NodeKind::Inner(children) => {
                        stack.extend(children.iter().map(|&c| (c, depth + 1)))
                    }
                }
            }
        }
        TreeStats {
            points: self.len(),
            height,
            nodes,
            leaves,
            mean_fill: if nodes == 0 {
                0.0
            } else {
                entries as f64 / (nodes * self.config.capacity) as f64
            },
        }
    }

    /// Recomputes every stored distance bound from the points themselves.
    ///
    /// Checks covering radii, hyper-rings, parent distances, fill limits,
    /// parent links, balance, and that every slot is stored exactly once.
    pub fn audit(&self) -> Result<AuditReport, String> {
        let mut report = AuditReport {
            points: 0,
            height: 0,
            checked_radii: 0,
            checked_rings: 0,
        };
        let Some(root) = self.root else {
            return if self.is_empty() {
                Ok(report)
            } else {
                Err("points stored but the tree has no root".into())
            };
        };
        if self.nodes[root].parent.is_some() || self.nodes[root].entry.parent_dist.is_some() {
            return Err("root has a parent".into());
        }

        let mut seen = vec![false; self.len()];
        let mut leaf_depth = None;
        let mut stack = vec![(root, 1usize)];
        while let Some((id, depth)) = stack.pop() {
            let node = &self.nodes[id];
            let entry = &node.entry;
            if node.len() > self.config.capacity {
                return Err(format!("node {id} holds {} > capacity entries", node.len()));
            }
            if node.is_empty() {
                return Err(format!("node {id} is empty"));
            }
            if entry.rings.len() != self.pivots.len() {
                return Err(format!("node {id} has {} rings", entry.rings.len()));
            }
            for ring in &entry.rings {
                if !(0.0 <= ring.min && ring.min <= ring.max) {
                    return Err(format!("node {id} has an invalid ring {ring:?}"));
                }
            }

            for slot in self.subtree_slots(id) {
                let d = self.dist_slots(slot, entry.center);
                if d > entry.radius + TOLERANCE {
                    return Err(format!(
                        "node {id}: point slot {slot} at {d} exceeds radius {}",
                        entry.radius
                    ));
                }
                report.checked_radii += 1;
                for (i, (ring, &pd)) in entry
                    .rings
                    .iter()
                    .zip(self.point_pivot_dists(slot))
                    .enumerate()
                {
                    let recomputed =
                        crate::metric::euclidean(self.point_coords(slot), self.pivots.get(i));
                    if (recomputed - pd).abs() > TOLERANCE {
                        return Err(format!("slot {slot}: stale pivot distance {i}"));
                    }
                    if pd < ring.min - TOLERANCE || pd > ring.max + TOLERANCE {
                        return Err(format!(
                            "node {id}: slot {slot} pivot {i} distance {pd} outside {ring:?}"
                        ));
                    }
                    report.checked_rings += 1;
                }
            }

            match &node.kind {
                NodeKind::Leaf(entries) => {
                    match leaf_depth {
                        None => leaf_depth = Some(depth),
                        Some(d) if d != depth => {
                            return Err(format!("leaf {id} at depth {depth}, expected {d}"));
                        }
                        _ => {}
                    }
                    for e in entries {
                        if std::mem::replace(&mut seen[e.slot], true) {
                            return Err(format!("slot {} stored twice", e.slot));
                        }
                        let d = self.dist_slots(e.slot, entry.center);
                        if (d - e.parent_dist).abs() > TOLERANCE {
                            return Err(format!(
                                "leaf {id}: slot {} parent distance is stale",
                                e.slot
                            ));
                        }
                    }
                }
                NodeKind::Inner(children) => {
                    for &c in children {
                        let child = &self.nodes[c];
                        if child.parent != Some(id) {
                            return Err(format!("node {c} does not point back to parent {id}"));
                        }
                        let d = self.dist_slots(child.entry.center, entry.center);
                        match child.entry.parent_dist {
                            Some(pd) if (pd - d).abs() <= TOLERANCE => {}
                            other => {
                                return Err(format!(
                                    "node {c}: parent distance {other:?}, actual {d}"
                                ))
                            }
                        }
                        stack.push((c, depth + 1));
                    }
                }
            }
        }
        if let Some(slot) = seen.iter().position(|s| !s) {
            return Err(format!("slot {slot} is not stored in any leaf"));
        }
        report.points = self.len();
        report.height = leaf_depth.unwrap_or(0);
        Ok(report)
    }
}
