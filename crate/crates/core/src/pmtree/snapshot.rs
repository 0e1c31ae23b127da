//! Versioned binary snapshot of a built index.
//!
//! Little-endian layout:
//!
//! ```text
//! "PMLS" | u32 version | u32 d | u32 m | u32 s | u32 capacity
//! | u64 family seed | u64 tree seed | u8 policy | u64 n
//! | s x (u64 pivot id, m x f64)
//! | preorder nodes
//! ```
//!
//! A node is `u8 tag (0 leaf, 1 inner) | u64 center | f64 radius |
//! f64 parent distance (NaN at the root) | s x (f64 min, f64 max) |
//! u32 child count`, followed by its children for inner nodes or by
//! `count x (u64 id, f64 parent distance, m x f64)` for leaves. Centers are
//! indices into the points in the order their leaves appear in the file.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    HyperRing, LeafEntry, Node, NodeId, NodeKind, PivotSet, PmTree, PromotePolicy, RoutingEntry,
    TreeConfig,
};
use crate::error::{Error, Result};
use crate::metric::euclidean;

const MAGIC: &[u8; 4] = b"PMLS";
const VERSION: u32 = 1;

/// A tree plus what is needed to regenerate its hash family.
#[derive(Debug, Clone)]
pub struct IndexSnapshot {
    /// Original dimensionality.
    pub d: usize,
    pub family_seed: u64,
    pub tree: PmTree,
}

impl IndexSnapshot {
    pub fn to_bytes(&self) -> Vec<u8> {
        let tree = &self.tree;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [
            VERSION,
            self.d as u32,
            tree.dim as u32,
            tree.pivots.len() as u32,
            tree.config.capacity as u32,
        ] {
            out.extend(v.to_le_bytes());
        }
        out.extend(self.family_seed.to_le_bytes());
        out.extend(tree.config.seed.to_le_bytes());
        out.push(match tree.config.policy {
            PromotePolicy::MRad => 0,
            PromotePolicy::Random => 1,
        });
        out.extend((tree.len() as u64).to_le_bytes());
        for (id, coords) in tree.pivots.ids.iter().zip(&tree.pivots.coords) {
            out.extend((*id as u64).to_le_bytes());
            coords.iter().for_each(|v| out.extend(v.to_le_bytes()));
        }

        let mut file_index = vec![0u64; tree.len()];
        let mut next = 0u64;
        for leaf in tree.leaves() {
            for e in tree.nodes[leaf].leaf_entries() {
                file_index[e.slot] = next;
                next += 1;
            }
        }
        if let Some(root) = tree.root {
            write_node(tree, root, &file_index, &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let d = r.u32()? as usize;
        let m = r.u32()? as usize;
        let s = r.u32()? as usize;
        let capacity = r.u32()? as usize;
        let family_seed = r.u64()?;
        let tree_seed = r.u64()?;
        let policy = match r.take(1)?[0] {
            0 => PromotePolicy::MRad,
            1 => PromotePolicy::Random,
            other => return Err(Error::Snapshot(format!("unknown promote policy {other}"))),
        };
        let n = r.u64()? as usize;
        let mut pivots = PivotSet::empty();
        for _ in 0..s {
            pivots.ids.push(r.u64()? as usize);
            pivots.coords.push(r.f64s(m)?);
        }
        let config = TreeConfig {
            capacity,
            policy,
            seed: tree_seed,
        };
        let mut tree =
            PmTree::new(m, config, pivots).map_err(|e| Error::Snapshot(e.to_string()))?;
        if n > 0 {
            let root = read_node(&mut tree, &mut r, None, 0)?;
            tree.root = Some(root);
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes".into()));
        }
        if tree.len() != n {
            return Err(Error::Snapshot(format!(
                "header says {n} points, found {}",
                tree.len()
            )));
        }
        if tree.nodes.iter().any(|node| node.entry.center >= n) {
            return Err(Error::Snapshot("center index out of range".into()));
        }
        tree.rng = ChaCha8Rng::seed_from_u64(tree_seed);
        Ok(Self {
            d,
            family_seed,
            tree,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn write_node(tree: &PmTree, id: NodeId, file_index: &[u64], out: &mut Vec<u8>) {
    let node = &tree.nodes[id];
    let e = &node.entry;
    out.push(if node.is_leaf() { 0 } else { 1 });
    out.extend(file_index[e.center].to_le_bytes());
    out.extend(e.radius.to_le_bytes());
    out.extend(e.parent_dist.unwrap_or(f64::NAN).to_le_bytes());
    for ring in &e.rings {
        out.extend(ring.min.to_le_bytes());
        out.extend(ring.max.to_le_bytes());
    }
    out.extend((node.len() as u32).to_le_bytes());
    match &node.kind {
        NodeKind::Leaf(entries) => {
            for le in entries {
                out.extend((tree.ids[le.slot] as u64).to_le_bytes());
                out.extend(le.parent_dist.to_le_bytes());
                tree.point_coords(le.slot)
                    .iter()
                    .for_each(|v| out.extend(v.to_le_bytes()));
            }
        }
        NodeKind::Inner(children) => {
            for &c in children {
                write_node(tree, c, file_index, out);
            }
        }
    }
}

fn read_node(
    tree: &mut PmTree,
    r: &mut Reader<'_>,
    parent: Option<NodeId>,
    depth: usize,
) -> Result<NodeId> {
    if depth > 256 {
        return Err(Error::Snapshot("tree too deep".into()));
    }
    let tag = r.take(1)?[0];
    let center = r.u64()? as usize;
    let radius = r.f64()?;
    let pd = r.f64()?;
    let parent_dist = if pd.is_nan() { None } else { Some(pd) };
    if parent.is_some() != parent_dist.is_some() {
        return Err(Error::Snapshot(
            "parent distance inconsistent with position".into(),
        ));
    }
    let mut rings = Vec::with_capacity(tree.pivots.len());
    for _ in 0..tree.pivots.len() {
        let min = r.f64()?;
        let max = r.f64()?;
        rings.push(HyperRing { min, max });
    }
    let count = r.u32()? as usize;
    if count == 0 || count > tree.config.capacity {
        return Err(Error::Snapshot(format!("node with {count} entries")));
    }
    let id = tree.nodes.len();
    tree.nodes.push(Node {
        entry: RoutingEntry {
            center,
            radius,
            parent_dist,
            rings,
        },
        parent,
        kind: NodeKind::Inner(Vec::new()),
    });
    let kind = match tag {
        0 => {
            let mut entries = Vec::with_capacity(count);
            for _ in 0..count {
                let pid = r.u64()? as usize;
                let parent_dist = r.f64()?;
                let coords = r.f64s(tree.dim)?;
                let slot = tree.ids.len();
                tree.ids.push(pid);
                let pdists: Vec<f64> = tree
                    .pivots
                    .coords
                    .iter()
                    .map(|p| euclidean(&coords, p))
                    .collect();
                tree.coords.extend_from_slice(&coords);
                tree.pivot_dists.extend_from_slice(&pdists);
                entries.push(LeafEntry { slot, parent_dist });
            }
            NodeKind::Leaf(entries)
        }
        1 => {
            let mut children = Vec::with_capacity(count);
            for _ in 0..count {
                children.push(read_node(tree, r, Some(id), depth + 1)?);
            }
            NodeKind::Inner(children)
        }
        other => return Err(Error::Snapshot(format!("unknown node tag {other}"))),
    };
    tree.nodes[id].kind = kind;
    Ok(id)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Snapshot("truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::select_pivots;
    use super::super::tests::random_points;
    use super::*;

    #[test]
    fn round_trip_preserves_queries() {
        let pts = random_points(3_000, 6, 5);
        let pivots = select_pivots(&pts, 5, 1).unwrap();
        let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
        let snap = IndexSnapshot {
            d: 40,
            family_seed: 77,
            tree,
        };
        let bytes = snap.to_bytes();
        let back = IndexSnapshot::from_bytes(&bytes).unwrap();
        assert_eq!((back.d, back.family_seed), (40, 77));
        back.tree.audit().unwrap();
        assert_eq!(back.tree.stats(), snap.tree.stats());
        for i in 0..10 {
            let q = &pts[i * 97].coords;
            let a: Vec<(usize, f64)> = snap
                .tree
                .range_query(q, 6.0, None)
                .iter()
                .map(|h| (h.id, h.dist))
                .collect();
            let b: Vec<(usize, f64)> = back
                .tree
                .range_query(q, 6.0, None)
                .iter()
                .map(|h| (h.id, h.dist))
                .collect();
            assert_eq!(a, b);
        }
        // re-serializing the loaded tree is byte-identical
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let pts = random_points(100, 3, 5);
        let pivots = select_pivots(&pts, 2, 1).unwrap();
        let tree = PmTree::build(&pts, TreeConfig::default(), pivots).unwrap();
        let bytes = IndexSnapshot {
            d: 3,
            family_seed: 0,
            tree,
        }
        .to_bytes();
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(IndexSnapshot::from_bytes(&bad).is_err());
        assert!(IndexSnapshot::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(IndexSnapshot::from_bytes(&bad).is_err());
    }

    #[test]
    fn empty_tree() {
        let tree = PmTree::new(4, TreeConfig::default(), PivotSet::empty()).unwrap();
        let snap = IndexSnapshot {
            d: 8,
            family_seed: 1,
            tree,
        };
        let back = IndexSnapshot::from_bytes(&snap.to_bytes()).unwrap();
        assert!(back.tree.is_empty());
    }
}
