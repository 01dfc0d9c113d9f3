//! Bounded-deletion streams: representation, synthetic generators, the
//! adversarial lower-bound construction and the text file format.

mod adversary;
mod deletions;
mod generate;
mod io;

use serde::{Deserialize, Serialize};

use crate::ItemId;

pub use adversary::{adversarial_stream, adversarial_stream_against, AdversarialStream};
pub use deletions::{apply_deletions, DeletionPattern, DeletionPlan, DeleteOrder};
pub use generate::{gen_binomial, gen_zipf, gen_zipf_permuted, zipf_mass, MAX_ZIPF_UNIVERSE_BITS};
pub use io::{read_stream, read_stream_file, write_stream, write_stream_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpKind {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamOp {
    pub kind: OpKind,
    pub item: ItemId,
}

impl StreamOp {
    pub fn insert(item: ItemId) -> Self {
        Self { kind: OpKind::Insert, item }
    }

    pub fn delete(item: ItemId) -> Self {
        Self { kind: OpKind::Delete, item }
    }

    /// `+1` builds an insert, anything else a delete.
    pub fn from_weight(item: ItemId, weight: i64) -> Self {
        if weight > 0 {
            Self::insert(item)
        } else {
            Self::delete(item)
        }
    }

    pub fn weight(&self) -> i64 {
        match self.kind {
            OpKind::Insert => 1,
            OpKind::Delete => -1,
        }
    }
}

/// A sequence of unit updates plus the metadata carried in the file header.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub universe_bits: u32,
    /// Declared `I / (I - D)`.
    pub alpha: f64,
    pub seed: u64,
    /// Generator name and parameters, e.g. `zipf/s=1/ratio=0.5`.
    pub generator: Option<String>,
    pub ops: Vec<StreamOp>,
}

impl Stream {
    pub fn new(universe_bits: u32, alpha: f64, seed: u64, ops: Vec<StreamOp>) -> Self {
        Self { universe_bits, alpha, seed, generator: None, ops }
    }

    pub fn with_generator(mut self, generator: impl Into<String>) -> Self {
        self.generator = Some(generator.into());
        self
    }

    pub fn inserts(&self) -> u64 {
        self.ops.iter().filter(|op| op.kind == OpKind::Insert).count() as u64
    }

    pub fn deletes(&self) -> u64 {
        self.ops.iter().filter(|op| op.kind == OpKind::Delete).count() as u64
    }

    /// `I / (I - D)` measured from the ops, or infinity when `I = D`.
    pub fn measured_alpha(&self) -> f64 {
        let (i, d) = (self.inserts(), self.deletes());
        if i == d {
            f64::INFINITY
        } else {
            i as f64 / (i - d) as f64
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `(item, weight)` pairs, the shape the dyadic batch update takes.
    pub fn weighted(&self) -> Vec<(ItemId, i64)> {
        self.ops.iter().map(|op| (op.item, op.weight())).collect()
    }
}
