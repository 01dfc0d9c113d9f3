//! Dual indexed heap backing the SpaceSaving family.
//!
//! Entries live in a slot array. A min-heap orders slots by count, a
//! max-heap orders slots by error, and a dictionary maps each monitored
//! item to its slot. Each slot records where it sits in both heaps, so
//! any entry can be re-sifted in `O(log k)` after an update.

use std::collections::HashMap;

use crate::error::{Result, SketchError};
use crate::ItemId;

/// One monitored `(item, count, error)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct CounterEntry {
    pub item: ItemId,
    pub count: i64,
    pub error: i64,
}

impl CounterEntry {
    pub fn new(item: ItemId, count: i64, error: i64) -> Self {
        Self { item, count, error }
    }
}

#[derive(Debug, Clone, Copy)]
enum Order {
    /// Root holds the smallest key.
    Min,
    /// Root holds the largest key.
    Max,
}

/// Array heap over slot ids with a slot -> heap-index position map.
#[derive(Debug, Clone)]
struct SlotHeap {
    order: Order,
    heap: Vec<usize>,
    pos: Vec<usize>,
}

impl SlotHeap {
    fn with_capacity(order: Order, capacity: usize) -> Self {
        Self {
            order,
            heap: Vec::with_capacity(capacity),
            pos: Vec::with_capacity(capacity),
        }
    }

    #[inline]
    fn above(&self, a: i64, b: i64) -> bool {
        match self.order {
            Order::Min => a < b,
            Order::Max => a > b,
        }
    }

    #[inline]
    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = i;
        self.pos[self.heap[j]] = j;
    }

    fn push(&mut self, slot: usize, key: impl Fn(usize) -> i64) {
        debug_assert_eq!(slot, self.pos.len());
        self.pos.push(self.heap.len());
        self.heap.push(slot);
        self.sift_up(self.heap.len() - 1, &key);
    }

    fn sift_up(&mut self, mut i: usize, key: &impl Fn(usize) -> i64) -> usize {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.above(key(self.heap[i]), key(self.heap[parent])) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
        i
    }

    fn sift_down(&mut self, mut i: usize, key: &impl Fn(usize) -> i64) -> usize {
        let n = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let mut best = left;
            if right < n && self.above(key(self.heap[right]), key(self.heap[left])) {
                best = right;
            }
            if self.above(key(self.heap[best]), key(self.heap[i])) {
                self.swap(i, best);
                i = best;
            } else {
                break;
            }
        }
        i
    }

    /// Restores the heap property around `slot` after its key changed.
    fn resift(&mut self, slot: usize, key: impl Fn(usize) -> i64) {
        let i = self.pos[slot];
        let i = self.sift_up(i, &key);
        self.sift_down(i, &key);
    }

    fn root(&self) -> Option<usize> {
        self.heap.first().copied()
    }

    fn check(&self, key: impl Fn(usize) -> i64, name: &str) -> Result<(), String> {
        if self.heap.len() != self.pos.len() {
            return Err(format!("{name}: heap has {} slots, position map {}", self.heap.len(), self.pos.len()));
        }
        for (i, &slot) in self.heap.iter().enumerate() {
            if self.pos.get(slot) != Some(&i) {
                return Err(format!("{name}: slot {slot} at index {i} but position map says {:?}", self.pos.get(slot)));
            }
            if i > 0 {
                let parent = (i - 1) / 2;
                if self.above(key(slot), key(self.heap[parent])) {
                    return Err(format!("{name}: heap property broken between index {parent} and {i}"));
                }
            }
        }
        Ok(())
    }
}

/// Min-heap on counts, max-heap on errors, and an item -> slot dictionary.
#[derive(Debug, Clone)]
pub struct DualHeapIndex {
    capacity: usize,
    entries: Vec<CounterEntry>,
    by_count: SlotHeap,
    by_error: SlotHeap,
    positions: HashMap<ItemId, usize>,
}

impl DualHeapIndex {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity),
            by_count: SlotHeap::with_capacity(Order::Min, capacity),
            by_error: SlotHeap::with_capacity(Order::Max, capacity),
            positions: HashMap::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.positions.contains_key(&item)
    }

    pub fn get(&self, item: ItemId) -> Option<&CounterEntry> {
        self.positions.get(&item).map(|&slot| &self.entries[slot])
    }

    /// Entries in slot order (not sorted).
    pub fn entries(&self) -> &[CounterEntry] {
        &self.entries
    }

    /// Entry with the minimum count.
    pub fn min_entry(&self) -> Option<&CounterEntry> {
        self.by_count.root().map(|slot| &self.entries[slot])
    }

    /// Entry with the maximum error.
    pub fn max_error_entry(&self) -> Option<&CounterEntry> {
        self.by_error.root().map(|slot| &self.entries[slot])
    }

    /// Starts monitoring `item` in a fresh slot.
    pub fn push(&mut self, item: ItemId, count: i64, error: i64) -> Result<()> {
        if self.is_full() {
            return Err(SketchError::InvalidParameter(format!(
                "index is full ({} entries)",
                self.capacity
            )));
        }
        if self.positions.contains_key(&item) {
            return Err(SketchError::AlreadyMonitored(item));
        }
        let slot = self.entries.len();
        self.entries.push(CounterEntry::new(item, count, error));
        self.positions.insert(item, slot);
        let entries = &self.entries;
        self.by_count.push(slot, |s| entries[s].count);
        self.by_error.push(slot, |s| entries[s].error);
        Ok(())
    }

    /// Applies `count_delta` and `error_delta` to a monitored item and re-sifts both heaps.
    pub fn adjust(&mut self, item: ItemId, count_delta: i64, error_delta: i64) -> Result<()> {
        let slot = *self.positions.get(&item).ok_or(SketchError::UnknownItem(item))?;
        self.adjust_slot(slot, count_delta, error_delta);
        Ok(())
    }

    /// Same as [`adjust`](Self::adjust) but targets the max-error root.
    pub fn adjust_max_error(&mut self, count_delta: i64, error_delta: i64) -> Result<CounterEntry> {
        let slot = self.by_error.root().ok_or(SketchError::Empty)?;
        self.adjust_slot(slot, count_delta, error_delta);
        Ok(self.entries[slot])
    }

    fn adjust_slot(&mut self, slot: usize, count_delta: i64, error_delta: i64) {
        let entry = &mut self.entries[slot];
        entry.count += count_delta;
        entry.error += error_delta;
        let entries = &self.entries;
        if count_delta != 0 {
            self.by_count.resift(slot, |s| entries[s].count);
        }
        if error_delta != 0 {
            self.by_error.resift(slot, |s| entries[s].error);
        }
    }

    /// Rewrites the min-count entry as `(new_item, minCount + 1, minCount)`.
    ///
    /// Returns the evicted entry.
    pub fn replace_min(&mut self, new_item: ItemId) -> Result<CounterEntry> {
        if self.positions.contains_key(&new_item) {
            return Err(SketchError::AlreadyMonitored(new_item));
        }
        let slot = self.by_count.root().ok_or(SketchError::Empty)?;
        let evicted = self.entries[slot];
        self.positions.remove(&evicted.item);
        self.positions.insert(new_item, slot);
        self.entries[slot] = CounterEntry::new(new_item, evicted.count + 1, evicted.count);
        let entries = &self.entries;
        self.by_count.resift(slot, |s| entries[s].count);
        self.by_error.resift(slot, |s| entries[s].error);
        Ok(evicted)
    }

    /// Full structural check: both heap properties, both position maps and
    /// the item dictionary.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.entries.len();
        if n > self.capacity {
            return Err(format!("{n} entries exceed capacity {}", self.capacity));
        }
        if self.positions.len() != n || self.by_count.heap.len() != n || self.by_error.heap.len() != n {
            return Err(format!(
                "size mismatch: entries {n}, dictionary {}, min-heap {}, max-heap {}",
                self.positions.len(),
                self.by_count.heap.len(),
                self.by_error.heap.len()
            ));
        }
        for (&item, &slot) in &self.positions {
            match self.entries.get(slot) {
                Some(e) if e.item == item => {}
                other => return Err(format!("dictionary maps {item} to slot {slot} holding {other:?}")),
            }
        }
        self.by_count.check(|s| self.entries[s].count, "min-heap")?;
        self.by_error.check(|s| self.entries[s].error, "max-heap")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn replace_min_matches_trace_step() {
        let mut index = DualHeapIndex::new(2);
        index.push(0xA, 2, 0).unwrap();
        index.push(0xC, 1, 0).unwrap();
        let evicted = index.replace_min(0xB).unwrap();
        assert_eq!(evicted, CounterEntry::new(0xC, 1, 0));
        assert_eq!(index.get(0xA), Some(&CounterEntry::new(0xA, 2, 0)));
        assert_eq!(index.get(0xB), Some(&CounterEntry::new(0xB, 2, 1)));
        assert!(!index.contains(0xC));
        assert_eq!(index.max_error_entry().unwrap().item, 0xB);
        index.check_invariants().unwrap();
    }

    #[test]
    fn single_slot_replace() {
        let mut index = DualHeapIndex::new(1);
        index.push(1, 1, 0).unwrap();
        index.replace_min(2).unwrap();
        assert_eq!(index.entries(), &[CounterEntry::new(2, 2, 1)]);
    }

    #[test]
    fn replace_with_monitored_item_is_rejected() {
        let mut index = DualHeapIndex::new(1);
        index.push(1, 1, 0).unwrap();
        assert_eq!(index.replace_min(1), Err(SketchError::AlreadyMonitored(1)));
    }

    #[test]
    fn adjust_unknown_item() {
        let mut index = DualHeapIndex::new(4);
        assert_eq!(index.adjust(9, 1, 0), Err(SketchError::UnknownItem(9)));
        assert_eq!(index.adjust_max_error(-1, -1), Err(SketchError::Empty));
    }

    #[test]
    fn decrement_max_error_root_keeps_heaps() {
        let mut index = DualHeapIndex::new(4);
        index.push(1, 5, 3).unwrap();
        index.push(2, 4, 2).unwrap();
        index.push(3, 6, 3).unwrap();
        index.push(4, 2, 0).unwrap();
        for _ in 0..3 {
            index.adjust_max_error(-1, -1).unwrap();
            index.check_invariants().unwrap();
        }
        let max = index.max_error_entry().unwrap().error;
        assert!(index.entries().iter().all(|e| e.error <= max));
    }

    #[test]
    fn increment_min_root() {
        let mut index = DualHeapIndex::new(3);
        index.push(1, 1, 0).unwrap();
        index.push(2, 1, 0).unwrap();
        index.push(3, 2, 0).unwrap();
        let root = index.min_entry().unwrap().item;
        index.adjust(root, 1, 0).unwrap();
        index.check_invariants().unwrap();
        assert_eq!(index.min_entry().unwrap().count, 1);
    }

    #[test]
    fn randomized_adjusts_hold_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut index = DualHeapIndex::new(64);
        for item in 0..64u64 {
            index.push(item, rng.random_range(0..50), rng.random_range(0..50)).unwrap();
        }
        for step in 0..100_000 {
            let item = rng.random_range(0..64u64);
            let dc = if rng.random_bool(0.5) { 1 } else { -1 };
            let de = rng.random_range(-2..=2);
            index.adjust(item, dc, de).unwrap();
            if let Err(e) = index.check_invariants() {
                panic!("step {step}: {e}");
            }
        }
    }

    #[test]
    fn replace_sequence_conserves_count_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut index = DualHeapIndex::new(16);
        let mut ops = 0i64;
        let mut next_item = 0u64;
        for _ in 0..20_000 {
            ops += 1;
            if !index.is_full() {
                index.push(next_item, 1, 0).unwrap();
                next_item += 1;
            } else if rng.random_bool(0.3) {
                let pick = index.entries()[rng.random_range(0..index.len())].item;
                index.adjust(pick, 1, 0).unwrap();
            } else {
                index.replace_min(next_item).unwrap();
                next_item += 1;
            }
        }
        let sum: i64 = index.entries().iter().map(|e| e.count).sum();
        assert_eq!(sum, ops);
        index.check_invariants().unwrap();
    }
}
