//! Binary ground-truth cache.
//!
//! Layout (little-endian): magic `PMGT`, `u32` version, `u8` kind
//! (0 = kNN, 1 = kCP), `u32` k, `u64` fingerprint, `u32` record count, then
//! per record a `u32` length followed by `(u64 id, f64 dist)` entries for kNN
//! or `(u64 a, u64 b, f64 dist)` entries for kCP.

use std::fs;
use std::path::Path;

use super::{Neighbor, PairNeighbor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PMGT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthKind {
    Knn,
    Kcp,
}

/// Exact reference answers, keyed by a caller-chosen fingerprint of the
/// dataset and query set that produced them.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Knn {
        k: usize,
        fingerprint: u64,
        per_query: Vec<Vec<Neighbor>>,
    },
    Kcp {
        k: usize,
        fingerprint: u64,
        pairs: Vec<PairNeighbor>,
    },
}

impl GroundTruth {
    pub fn kind(&self) -> GroundTruthKind {
        match self {
            GroundTruth::Knn { .. } => GroundTruthKind::Knn,
            GroundTruth::Kcp { .. } => GroundTruthKind::Kcp,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            GroundTruth::Knn { k, .. } | GroundTruth::Kcp { k, .. } => *k,
        }
    }

    pub fn fingerprint(&self) -> u64 {
        match self {
            GroundTruth::Knn { fingerprint, .. } | GroundTruth::Kcp { fingerprint, .. } => {
                *fingerprint
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend(VERSION.to_le_bytes());
        match self {
            GroundTruth::Knn {
                k,
                fingerprint,
                per_query,
            } => {
                out.push(0);
                out.extend((*k as u32).to_le_bytes());
                out.extend(fingerprint.to_le_bytes());
                out.extend((per_query.len() as u32).to_le_bytes());
                for row in per_query {
                    out.extend((row.len() as u32).to_le_bytes());
                    for nb in row {
                        out.extend((nb.id as u64).to_le_bytes());
                        out.extend(nb.dist.to_le_bytes());
                    }
                }
            }
            GroundTruth::Kcp {
                k,
                fingerprint,
                pairs,
            } => {
                out.push(1);
                out.extend((*k as u32).to_le_bytes());
                out.extend(fingerprint.to_le_bytes());
                out.extend(1u32.to_le_bytes());
                out.extend((pairs.len() as u32).to_le_bytes());
                for p in pairs {
                    out.extend((p.a as u64).to_le_bytes());
                    out.extend((p.b as u64).to_le_bytes());
                    out.extend(p.dist.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Snapshot("ground-truth cache: bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Snapshot(format!(
                "ground-truth cache: unsupported version {version}"
            )));
        }
        let kind = r.take(1)?[0];
        let k = r.u32()? as usize;
        let fingerprint = r.u64()?;
        let records = r.u32()? as usize;
        let gt = match kind {
            0 => {
                let mut per_query = Vec::with_capacity(records.min(1 << 20));
                for _ in 0..records {
                    let len = r.u32()? as usize;
                    let mut row = Vec::with_capacity(len.min(1 << 20));
                    for _ in 0..len {
                        let id = r.u64()? as usize;
                        let dist = r.f64()?;
                        row.push(Neighbor { id, dist });
                    }
                    per_query.push(row);
                }
                GroundTruth::Knn {
                    k,
                    fingerprint,
                    per_query,
                }
            }
            1 => {
                if records != 1 {
                    return Err(Error::Snapshot(
                        "ground-truth cache: kCP holds one record".into(),
                    ));
                }
                let len = r.u32()? as usize;
                let mut pairs = Vec::with_capacity(len.min(1 << 20));
                for _ in 0..len {
                    let a = r.u64()? as usize;
                    let b = r.u64()? as usize;
                    let dist = r.f64()?;
                    pairs.push(PairNeighbor { a, b, dist });
                }
                GroundTruth::Kcp {
                    k,
                    fingerprint,
                    pairs,
                }
            }
            other => {
                return Err(Error::Snapshot(format!(
                    "ground-truth cache: unknown kind {other}"
                )))
            }
        };
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("ground-truth cache: trailing bytes".into()));
        }
        Ok(gt)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
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
            .ok_or_else(|| Error::Snapshot("ground-truth cache: truncated".into()))?;
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
}
