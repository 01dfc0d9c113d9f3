//! Exact frequency bookkeeping used as ground truth.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Result, SketchError};
use crate::stream::{OpKind, StreamOp};
use crate::ItemId;

/// Exact frequency vector under the strict turnstile model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactCounter {
    counts: HashMap<ItemId, u64>,
    inserted: u64,
    deleted: u64,
}

impl ExactCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replays `ops`, failing on the first deletion of an item whose
    /// frequency is already 0. The error names the stream-file line of the
    /// offending op (the header is line 1).
    pub fn from_ops(ops: &[StreamOp]) -> Result<Self> {
        let mut oracle = Self::new();
        for (i, &op) in ops.iter().enumerate() {
            oracle.apply(op).map_err(|e| match e {
                SketchError::ModelViolation(msg) => {
                    SketchError::ModelViolation(format!("line {}: {msg}", i + 2))
                }
                other => other,
            })?;
        }
        Ok(oracle)
    }

    pub fn apply(&mut self, op: StreamOp) -> Result<()> {
        match op.kind {
            OpKind::Insert => {
                *self.counts.entry(op.item).or_insert(0) += 1;
                self.inserted += 1;
            }
            OpKind::Delete => {
                let count = self.counts.get_mut(&op.item).filter(|c| **c > 0).ok_or_else(|| {
                    SketchError::ModelViolation(format!("deletion of item {} with frequency 0", op.item))
                })?;
                *count -= 1;
                if *count == 0 {
                    self.counts.remove(&op.item);
                }
                self.deleted += 1;
            }
        }
        Ok(())
    }

    pub fn freq(&self, item: ItemId) -> u64 {
        self.counts.get(&item).copied().unwrap_or(0)
    }

    /// `|F|_1 = I - D`.
    pub fn f1(&self) -> u64 {
        self.inserted - self.deleted
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn deleted(&self) -> u64 {
        self.deleted
    }

    /// Items with positive frequency, unordered.
    pub fn support(&self) -> impl Iterator<Item = (ItemId, u64)> + '_ {
        self.counts.iter().map(|(&item, &count)| (item, count))
    }

    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    /// `{ i : f(i) >= phi * |F|_1 }`, restricted to items with positive
    /// frequency.
    pub fn frequent(&self, phi: f64) -> BTreeSet<ItemId> {
        let threshold = phi * self.f1() as f64;
        self.support()
            .filter(|&(_, c)| c as f64 >= threshold)
            .map(|(item, _)| item)
            .collect()
    }

    /// Exact count of items strictly below each universe point:
    /// `out[x] = |{ stream items < x }|` for `x` in `0..=2^bits`.
    pub fn prefix_ranks(&self, universe_bits: u32) -> Vec<u64> {
        let size = 1usize << universe_bits;
        let mut freq = vec![0u64; size];
        for (item, count) in self.support() {
            freq[item as usize] += count;
        }
        let mut ranks = Vec::with_capacity(size + 1);
        let mut acc = 0;
        ranks.push(0);
        for f in freq {
            acc += f;
            ranks.push(acc);
        }
        ranks
    }

    /// Exact `|{ stream items < x }|`.
    pub fn rank_less(&self, x: u64) -> u64 {
        self.support().filter(|&(item, _)| item < x).map(|(_, c)| c).sum()
    }
}
