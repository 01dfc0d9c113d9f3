#![allow(dead_code)]

use bounded_sketch::{ExactCounter, ItemId, SketchConfig, SketchPolicy, SpaceSavingSketch, StreamOp};

/// Turns `(item, delete?)` choices into a strict stream: a delete choice
/// removes one occurrence of a live item picked by `item`, or becomes an
/// insert when nothing is live.
pub fn strict_ops(choices: &[(u64, bool)]) -> Vec<StreamOp> {
    let mut live: Vec<ItemId> = Vec::new();
    let mut ops = Vec::with_capacity(choices.len());
    for &(x, delete) in choices {
        if delete && !live.is_empty() {
            let victim = live.swap_remove(x as usize % live.len());
            ops.push(StreamOp::delete(victim));
        } else {
            live.push(x);
            ops.push(StreamOp::insert(x));
        }
    }
    ops
}

pub fn counts(ops: &[StreamOp]) -> (u64, u64) {
    let deletes = ops.iter().filter(|op| op.weight() < 0).count() as u64;
    (ops.len() as u64 - deletes, deletes)
}

pub fn sketch(policy: SketchPolicy, capacity: usize) -> SpaceSavingSketch {
    SpaceSavingSketch::new(SketchConfig::with_capacity(0.5, 2.0, policy, capacity).unwrap()).unwrap()
}

/// Largest `|query(i) - f(i)|` over every item that appears in `ops`.
pub fn max_error(sketch: &SpaceSavingSketch, oracle: &ExactCounter, ops: &[StreamOp]) -> u64 {
    ops.iter()
        .map(|op| (sketch.query(op.item) as i64 - oracle.freq(op.item) as i64).unsigned_abs())
        .max()
        .unwrap_or(0)
}
