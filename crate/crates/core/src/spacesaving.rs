//! The SpaceSaving family: insert-only SpaceSaving, the lazy deletion
//! variant and SpaceSaving± (active deletion), all on [`DualHeapIndex`].

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SketchError};
use crate::heap::{CounterEntry, DualHeapIndex};
use crate::ItemId;

/// How a sketch treats deletions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SketchPolicy {
    /// Plain SpaceSaving; deletions are rejected.
    InsertOnly,
    /// Deletions of unmonitored items are ignored.
    LazyDelete,
    /// Deletions of unmonitored items decrement the max-error entry.
    ActiveDelete,
}

impl SketchPolicy {
    pub fn short_name(self) -> &'static str {
        match self {
            SketchPolicy::InsertOnly => "ss",
            SketchPolicy::LazyDelete => "lazy",
            SketchPolicy::ActiveDelete => "ssp",
        }
    }
}

impl fmt::Display for SketchPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SketchPolicy::InsertOnly => "InsertOnly",
            SketchPolicy::LazyDelete => "LazyDelete",
            SketchPolicy::ActiveDelete => "ActiveDelete",
        };
        f.write_str(name)
    }
}

/// What to do with a deletion that provably breaks the strict model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ViolationMode {
    #[default]
    Strict,
    /// Skip the operation and bump the `violations` counter.
    Permissive,
}

/// `ceil(x)` that forgives float noise such as `2.0 / 0.01 = 200.00000000000003`.
pub(crate) fn tolerant_ceil(x: f64) -> f64 {
    let rounded = x.round();
    if (x - rounded).abs() <= 1e-9 * x.abs().max(1.0) {
        rounded
    } else {
        x.ceil()
    }
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon must be in (0, 1], got {epsilon}")));
    }
    Ok(())
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(invalid(format!("alpha must be a finite value >= 1, got {alpha}")));
    }
    Ok(())
}

/// Number of counters under which the accuracy guarantees hold:
/// `ceil(alpha / epsilon)` for the insert-only (alpha forced to 1) and lazy
/// policies, `ceil(2 alpha / epsilon)` for active deletion.
pub fn capacity_for(epsilon: f64, alpha: f64, policy: SketchPolicy) -> Result<usize> {
    validate_epsilon(epsilon)?;
    validate_alpha(alpha)?;
    let raw = match policy {
        SketchPolicy::InsertOnly => 1.0 / epsilon,
        SketchPolicy::LazyDelete => alpha / epsilon,
        SketchPolicy::ActiveDelete => 2.0 * alpha / epsilon,
    };
    let k = tolerant_ceil(raw);
    if k > (usize::MAX / 4) as f64 {
        return Err(invalid(format!("capacity {k} is too large")));
    }
    Ok((k as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub policy: SketchPolicy,
    pub capacity: usize,
    #[serde(default)]
    pub mode: ViolationMode,
}

impl SketchConfig {
    /// Guarantee-grade configuration sized by [`capacity_for`].
    pub fn guaranteed(epsilon: f64, alpha: f64, policy: SketchPolicy) -> Result<Self> {
        let alpha = if policy == SketchPolicy::InsertOnly { 1.0 } else { alpha };
        let capacity = capacity_for(epsilon, alpha, policy)?;
        Ok(Self { epsilon, alpha, policy, capacity, mode: ViolationMode::Strict })
    }

    /// Configuration with an explicit number of counters.
    pub fn with_capacity(epsilon: f64, alpha: f64, policy: SketchPolicy, capacity: usize) -> Result<Self> {
        validate_epsilon(epsilon)?;
        validate_alpha(alpha)?;
        if capacity == 0 {
            return Err(invalid("capacity must be at least 1"));
        }
        let alpha = if policy == SketchPolicy::InsertOnly { 1.0 } else { alpha };
        Ok(Self { epsilon, alpha, policy, capacity, mode: ViolationMode::Strict })
    }

    pub fn permissive(mut self) -> Self {
        self.mode = ViolationMode::Permissive;
        self
    }

    /// True when `capacity` meets [`capacity_for`] for this config.
    pub fn is_guarantee_grade(&self) -> bool {
        capacity_for(self.epsilon, self.alpha, self.policy).is_ok_and(|k| self.capacity >= k)
    }
}

/// SpaceSaving-family sketch over 64-bit item ids.
#[derive(Debug, Clone)]
pub struct SpaceSavingSketch {
    config: SketchConfig,
    index: DualHeapIndex,
    inserted: u64,
    deleted: u64,
    violations: u64,
}

impl SpaceSavingSketch {
    pub fn new(config: SketchConfig) -> Result<Self> {
        if config.capacity == 0 {
            return Err(invalid("capacity must be at least 1"));
        }
        Ok(Self {
            index: DualHeapIndex::new(config.capacity),
            config,
            inserted: 0,
            deleted: 0,
            violations: 0,
        })
    }

    pub fn config(&self) -> &SketchConfig {
        &self.config
    }

    pub fn policy(&self) -> SketchPolicy {
        self.config.policy
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    /// Counters are accounted as two 64-bit words each.
    pub fn space_bits(&self) -> u64 {
        self.config.capacity as u64 * 128
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn deleted(&self) -> u64 {
        self.deleted
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn index(&self) -> &DualHeapIndex {
        &self.index
    }

    pub fn insert(&mut self, item: ItemId) {
        self.inserted += 1;
        if self.index.contains(item) {
            self.index.adjust(item, 1, 0).expect("monitored item");
        } else if !self.index.is_full() {
            self.index.push(item, 1, 0).expect("free slot");
        } else {
            self.index.replace_min(item).expect("full index with unmonitored item");
        }
    }

    pub fn delete(&mut self, item: ItemId) -> Result<()> {
        if self.config.policy == SketchPolicy::InsertOnly {
            return Err(SketchError::Unsupported("deletion on an insert-only sketch"));
        }
        if self.index.contains(item) {
            self.index.adjust(item, -1, 0)?;
            if log::log_enabled!(log::Level::Warn) {
                if let Some(e) = self.index.get(item).filter(|e| e.count < 0) {
                    log::warn!("raw count of item {} dropped to {}", e.item, e.count);
                }
            }
            self.deleted += 1;
            return Ok(());
        }
        // An unmonitored item in a non-full sketch was never inserted.
        if !self.index.is_full() {
            return self.violation(format!("deletion of never-inserted item {item}"));
        }
        match self.config.policy {
            SketchPolicy::LazyDelete => {}
            SketchPolicy::ActiveDelete => {
                let max_error = self.index.max_error_entry().map_or(0, |e| e.error);
                if max_error <= 0 {
                    return self.violation(format!(
                        "deletion of unmonitored item {item} while every estimation error is 0"
                    ));
                }
                self.index.adjust_max_error(-1, -1)?;
            }
            SketchPolicy::InsertOnly => unreachable!(),
        }
        self.deleted += 1;
        Ok(())
    }

    fn violation(&mut self, message: String) -> Result<()> {
        match self.config.mode {
            ViolationMode::Strict => Err(SketchError::ModelViolation(message)),
            ViolationMode::Permissive => {
                self.violations += 1;
                Ok(())
            }
        }
    }

    /// Applies a signed unit update.
    pub fn update(&mut self, item: ItemId, weight: i64) -> Result<()> {
        match weight {
            1 => {
                self.insert(item);
                Ok(())
            }
            -1 => self.delete(item),
            w => Err(SketchError::InvalidWeight(w)),
        }
    }

    /// Estimated frequency, clamped at zero.
    pub fn query(&self, item: ItemId) -> u64 {
        self.index.get(item).map_or(0, |e| e.count.max(0) as u64)
    }

    pub fn raw_entry(&self, item: ItemId) -> Option<CounterEntry> {
        self.index.get(item).copied()
    }

    pub fn min_count(&self) -> Result<i64> {
        self.index.min_entry().map(|e| e.count).ok_or(SketchError::Empty)
    }

    pub fn max_error(&self) -> Result<i64> {
        self.index.max_error_entry().map(|e| e.error).ok_or(SketchError::Empty)
    }

    /// Entries sorted by item id.
    pub fn entries_sorted(&self) -> Vec<CounterEntry> {
        let mut entries = self.index.entries().to_vec();
        entries.sort_unstable_by_key(|e| e.item);
        entries
    }

    /// Monitored items with positive estimate, sorted by item id.
    pub fn report_positive(&self) -> Vec<(ItemId, u64)> {
        self.entries_sorted()
            .into_iter()
            .filter(|e| e.count > 0)
            .map(|e| (e.item, e.count as u64))
            .collect()
    }

    /// Monitored items whose estimate reaches `phi * (I - D)`. A non-positive
    /// threshold degenerates to [`report_positive`](Self::report_positive).
    pub fn report_threshold(&self, phi: f64) -> Vec<(ItemId, u64)> {
        let threshold = phi * self.inserted.saturating_sub(self.deleted) as f64;
        self.report_positive()
            .into_iter()
            .filter(|&(_, est)| est as f64 >= threshold)
            .collect()
    }

    /// Writes `item,count,error` lines sorted by item id.
    pub fn dump<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for e in self.entries_sorted() {
            writeln!(sink, "{},{},{}", e.item, e.count, e.error)?;
        }
        Ok(())
    }

    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.dump(&mut buf).expect("writing to a Vec");
        String::from_utf8(buf).expect("ascii dump")
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        self.index.check_invariants()
    }
}
