//! Accuracy metrics against the exact oracle.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::oracle::ExactCounter;
use crate::par::{self, Execution};
use crate::ItemId;

/// Largest universe for which rank metrics sweep every point.
pub const FULL_GRID_BITS: u32 = 16;
/// Evenly spaced grid size used above [`FULL_GRID_BITS`].
pub const SPARSE_GRID_POINTS: u64 = 4096;

/// `(1/|S|) * sum over S of (estimate(i) - f(i))^2`.
pub fn mse(estimate: impl Fn(ItemId) -> i64, oracle: &ExactCounter, eval_set: &[ItemId]) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(invalid("MSE evaluation set is empty"));
    }
    let total: f64 = eval_set
        .iter()
        .map(|&i| {
            let diff = (estimate(i) - oracle.freq(i) as i64) as f64;
            diff * diff
        })
        .sum();
    Ok(total / eval_set.len() as f64)
}

/// `max over S of |estimate(i) - f(i)|`.
pub fn max_abs_error(estimate: impl Fn(ItemId) -> i64, oracle: &ExactCounter, eval_set: &[ItemId]) -> u64 {
    eval_set
        .iter()
        .map(|&i| (estimate(i) - oracle.freq(i) as i64).unsigned_abs())
        .max()
        .unwrap_or(0)
}

/// `TP / (TP + FN)`; `None` when `truth` is empty.
pub fn recall(reported: &BTreeSet<ItemId>, truth: &BTreeSet<ItemId>) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let tp = reported.intersection(truth).count();
    Some(tp as f64 / truth.len() as f64)
}

/// `TP / (TP + FP)`; `None` when nothing was reported.
pub fn precision(reported: &BTreeSet<ItemId>, truth: &BTreeSet<ItemId>) -> Option<f64> {
    if reported.is_empty() {
        return None;
    }
    let tp = reported.intersection(truth).count();
    Some(tp as f64 / reported.len() as f64)
}

/// Worst rank error over the evaluation grid, absolute and normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDeviation {
    pub max_abs: u64,
    /// `max_abs / |F|_1`.
    pub ks: f64,
}

/// Points `x` at which `rank_less(x)` is compared: the whole of `[0, 2^L]`
/// for small universes, otherwise an even grid plus every distinct stream
/// item and its successor.
pub fn rank_grid(oracle: &ExactCounter, universe_bits: u32) -> Vec<u64> {
    let universe = 1u64 << universe_bits.min(63);
    if universe_bits <= FULL_GRID_BITS {
        return (0..=universe).collect();
    }
    let step = universe / SPARSE_GRID_POINTS;
    let mut grid: BTreeSet<u64> = (0..=SPARSE_GRID_POINTS).map(|i| i * step).collect();
    for (item, _) in oracle.support() {
        grid.insert(item);
        grid.insert(item + 1);
    }
    grid.into_iter().collect()
}

/// KS divergence of a rank estimator: the max over the grid of
/// `|rank_est(x) - rank_true(x)| / |F|_1`, with strict-less ranks.
pub fn ks_divergence(
    exec: Execution,
    rank_est: impl Fn(u64) -> u64 + Send + Sync,
    oracle: &ExactCounter,
    universe_bits: u32,
) -> Result<RankDeviation> {
    let f1 = oracle.f1();
    if f1 == 0 {
        return Err(invalid("KS divergence needs a nonempty frequency vector"));
    }
    let grid = rank_grid(oracle, universe_bits);
    let mut support: Vec<(u64, u64)> = oracle.support().collect();
    support.sort_unstable();
    let mut prefix = Vec::with_capacity(support.len() + 1);
    prefix.push(0u64);
    for &(_, c) in &support {
        prefix.push(prefix.last().unwrap() + c);
    }
    let truth = |x: u64| prefix[support.partition_point(|&(item, _)| item < x)];
    let worst = par::max_over_range(exec, grid.len(), |i| {
        let x = grid[i];
        rank_est(x).abs_diff(truth(x)) as f64
    }) as u64;
    Ok(RankDeviation { max_abs: worst, ks: worst as f64 / f1 as f64 })
}

/// Smallest `x` whose exact inclusive rank reaches `max(1, ceil(q |F|_1))`.
pub fn exact_quantile(oracle: &ExactCounter, q: f64) -> Option<ItemId> {
    let f1 = oracle.f1();
    if f1 == 0 {
        return None;
    }
    let target = ((q * f1 as f64).ceil() as u64).max(1);
    let mut support: Vec<(u64, u64)> = oracle.support().collect();
    support.sort_unstable();
    let mut acc = 0;
    for (item, count) in support {
        acc += count;
        if acc >= target {
            return Some(item);
        }
    }
    None
}
