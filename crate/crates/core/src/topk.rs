use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Distance-keyed item, ordered by distance then by `T`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Ranked<T> {
    pub dist: f64,
    pub item: T,
}

impl<T: Ord> PartialEq for Ranked<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Ord> Eq for Ranked<T> {}

impl<T: Ord> PartialOrd for Ranked<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Ord> Ord for Ranked<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.item.cmp(&other.item))
    }
}

/// Keeps the `k` smallest items seen.
#[derive(Debug, Clone)]
pub(crate) struct TopK<T> {
    k: usize,
    heap: BinaryHeap<Ranked<T>>,
}

impl<T: Ord + Copy> TopK<T> {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k.saturating_add(1).min(1 << 20)),
        }
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() >= self.k
    }

    /// The current `k`-th smallest distance, or `inf` while not full.
    pub fn threshold(&self) -> f64 {
        if self.is_full() {
            self.heap.peek().map_or(f64::INFINITY, |r| r.dist)
        } else {
            f64::INFINITY
        }
    }

    /// Returns whether the item was kept.
    pub fn push(&mut self, dist: f64, item: T) -> bool {
        if self.k == 0 {
            return false;
        }
        let cand = Ranked { dist, item };
        if self.heap.len() < self.k {
            self.heap.push(cand);
            return true;
        }
        let mut top = self.heap.peek_mut().expect("heap is full");
        if cand < *top {
            *top = cand;
            true
        } else {
            false
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        for r in other.heap {
            self.push(r.dist, r.item);
        }
        self
    }

    pub fn into_sorted(self) -> Vec<Ranked<T>> {
        self.heap.into_sorted_vec()
    }
}
