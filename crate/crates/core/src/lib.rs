//! Locality-sensitive random projection with a PM-tree index.
//!
//! Points are mapped to a low-dimensional space by `m` Gaussian projections
//! ([`projection`]); the projected points are indexed by a PM-tree
//! ([`pmtree`]); approximate nearest-neighbor ([`ann`]) and closest-pair
//! ([`cp`]) queries scan the index with radii derived from the chi-squared
//! law of projected distances and verify candidates in the original space.
//! [`data`] holds datasets, exact oracles and quality metrics.

pub mod ann;
pub mod cp;
pub mod data;
pub mod error;
pub mod metric;
pub mod pmtree;
pub mod projection;
mod topk;

pub use error::{Error, Result};
