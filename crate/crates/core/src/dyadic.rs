//! Dyadic decomposition over a `2^L` universe, turning any point
//! frequency estimator into a rank and quantile sketch.
//!
//! Level `h` summarizes the prefix `x >> h`, so one node at level `h`
//! stands for the dyadic interval `[node << h, (node + 1) << h)`. A prefix
//! `[0, x)` splits into at most `L` such intervals, one per set bit of `x`.

use crate::error::{invalid, Result, SketchError};
use crate::linear::{LinearKind, LinearSketch};
use crate::par::{self, Execution};
use crate::spacesaving::{capacity_for, validate_alpha, validate_epsilon, SketchConfig, SketchPolicy, SpaceSavingSketch};
use crate::ItemId;

/// Point-query frequency sketch usable as one dyadic level.
pub trait FrequencyEstimator: Send {
    fn update(&mut self, item: ItemId, weight: i64) -> Result<()>;

    /// Nonnegative frequency estimate.
    fn query(&self, item: ItemId) -> u64;

    /// Number of counters or cells held.
    fn counters(&self) -> usize;

    fn space_bits(&self) -> u64;
}

impl FrequencyEstimator for SpaceSavingSketch {
    fn update(&mut self, item: ItemId, weight: i64) -> Result<()> {
        SpaceSavingSketch::update(self, item, weight)
    }

    fn query(&self, item: ItemId) -> u64 {
        SpaceSavingSketch::query(self, item)
    }

    fn counters(&self) -> usize {
        self.capacity()
    }

    fn space_bits(&self) -> u64 {
        SpaceSavingSketch::space_bits(self)
    }
}

impl FrequencyEstimator for LinearSketch {
    fn update(&mut self, item: ItemId, weight: i64) -> Result<()> {
        LinearSketch::update(self, item, weight)
    }

    fn query(&self, item: ItemId) -> u64 {
        LinearSketch::query(self, item).max(0) as u64
    }

    fn counters(&self) -> usize {
        self.cells()
    }

    fn space_bits(&self) -> u64 {
        LinearSketch::space_bits(self)
    }
}

pub const MAX_UNIVERSE_BITS: u32 = 63;

#[derive(Debug, Clone)]
pub struct DyadicSketch<E> {
    universe_bits: u32,
    levels: Vec<E>,
    inserted: u64,
    deleted: u64,
}

/// Dyadic SpaceSaving±.
pub type DssSketch = DyadicSketch<SpaceSavingSketch>;
/// Dyadic Count-Median.
pub type DcsSketch = DyadicSketch<LinearSketch>;

fn validate_universe(universe_bits: u32) -> Result<()> {
    if !(1..=MAX_UNIVERSE_BITS).contains(&universe_bits) {
        return Err(invalid(format!(
            "universe_bits must be in [1, {MAX_UNIVERSE_BITS}], got {universe_bits}"
        )));
    }
    Ok(())
}

/// DSS±: `L` SpaceSaving± levels of `ceil(2 alpha L / epsilon)` counters.
pub fn dss_new(universe_bits: u32, epsilon: f64, alpha: f64) -> Result<DssSketch> {
    validate_universe(universe_bits)?;
    validate_epsilon(epsilon)?;
    let capacity = capacity_for(epsilon / universe_bits as f64, alpha, SketchPolicy::ActiveDelete)?;
    dss_with_capacity(universe_bits, epsilon, alpha, capacity)
}

/// DSS± with an explicit per-level capacity.
pub fn dss_with_capacity(universe_bits: u32, epsilon: f64, alpha: f64, capacity: usize) -> Result<DssSketch> {
    validate_universe(universe_bits)?;
    validate_epsilon(epsilon)?;
    validate_alpha(alpha)?;
    let level_eps = epsilon / universe_bits as f64;
    let config = SketchConfig::with_capacity(level_eps, alpha, SketchPolicy::ActiveDelete, capacity)?;
    let levels = (0..universe_bits)
        .map(|_| SpaceSavingSketch::new(config))
        .collect::<Result<Vec<_>>>()?;
    DyadicSketch::from_levels(universe_bits, levels)
}

/// DCS: `L` Count-Median levels, each with accuracy `epsilon / L` and
/// failure budget `delta / L`.
pub fn dcs_new(universe_bits: u32, epsilon: f64, delta: f64, seed: u64) -> Result<DcsSketch> {
    validate_universe(universe_bits)?;
    validate_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must be in (0, 1), got {delta}")));
    }
    let l = universe_bits as f64;
    let levels = (0..universe_bits)
        .map(|h| LinearSketch::new(LinearKind::CountMedian, epsilon / l, delta / l, level_seed(seed, h)))
        .collect::<Result<Vec<_>>>()?;
    DyadicSketch::from_levels(universe_bits, levels)
}

/// DCS with an explicit per-level table shape.
pub fn dcs_with_dimensions(universe_bits: u32, depth: usize, width: usize, seed: u64) -> Result<DcsSketch> {
    validate_universe(universe_bits)?;
    let levels = (0..universe_bits)
        .map(|h| LinearSketch::with_dimensions(LinearKind::CountMedian, depth, width, level_seed(seed, h)))
        .collect::<Result<Vec<_>>>()?;
    DyadicSketch::from_levels(universe_bits, levels)
}

fn level_seed(seed: u64, level: u32) -> u64 {
    crate::rng::mix(seed ^ (u64::from(level) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl<E: FrequencyEstimator> DyadicSketch<E> {
    /// Wraps `levels[h]` as the summary of `x >> h`.
    pub fn from_levels(universe_bits: u32, levels: Vec<E>) -> Result<Self> {
        validate_universe(universe_bits)?;
        if levels.len() != universe_bits as usize {
            return Err(invalid(format!(
                "expected {universe_bits} levels, got {}",
                levels.len()
            )));
        }
        Ok(Self { universe_bits, levels, inserted: 0, deleted: 0 })
    }

    pub fn universe_bits(&self) -> u32 {
        self.universe_bits
    }

    pub fn universe_size(&self) -> u64 {
        1u64 << self.universe_bits
    }

    pub fn levels(&self) -> &[E] {
        &self.levels
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn deleted(&self) -> u64 {
        self.deleted
    }

    /// `I - D`.
    pub fn total(&self) -> u64 {
        self.inserted.saturating_sub(self.deleted)
    }

    pub fn counters(&self) -> usize {
        self.levels.iter().map(E::counters).sum()
    }

    pub fn space_bits(&self) -> u64 {
        self.levels.iter().map(E::space_bits).sum()
    }

    fn check_item(&self, x: ItemId) -> Result<()> {
        if x >> self.universe_bits != 0 {
            return Err(SketchError::OutOfUniverse { item: x, universe_bits: self.universe_bits });
        }
        Ok(())
    }

    fn count(&mut self, weight: i64) {
        if weight > 0 {
            self.inserted += 1;
        } else {
            self.deleted += 1;
        }
    }

    pub fn update(&mut self, x: ItemId, weight: i64) -> Result<()> {
        self.check_item(x)?;
        if weight != 1 && weight != -1 {
            return Err(SketchError::InvalidWeight(weight));
        }
        for (h, level) in self.levels.iter_mut().enumerate() {
            level.update(x >> h, weight)?;
        }
        self.count(weight);
        Ok(())
    }

    /// Applies a batch of updates, fanning the levels out across workers.
    /// Every level sees the batch in order.
    pub fn extend(&mut self, exec: Execution, ops: &[(ItemId, i64)]) -> Result<()> {
        for &(x, w) in ops {
            self.check_item(x)?;
            if w != 1 && w != -1 {
                return Err(SketchError::InvalidWeight(w));
            }
        }
        let errors = std::sync::Mutex::new(Vec::new());
        par::for_each_mut(exec, &mut self.levels, |h, level| {
            for &(x, w) in ops {
                if let Err(e) = level.update(x >> h, w) {
                    errors.lock().expect("error list").push((h, e));
                    return;
                }
            }
        });
        for &(_, w) in ops {
            self.count(w);
        }
        let mut errors = errors.into_inner().expect("error list");
        errors.sort_by_key(|(h, _)| *h);
        match errors.into_iter().next() {
            Some((_, e)) => Err(e),
            None => Ok(()),
        }
    }

    /// Estimated number of stream items strictly less than `x`, for
    /// `x <= 2^L`.
    pub fn rank_less(&self, x: u64) -> Result<u64> {
        let universe = self.universe_size();
        if x > universe {
            return Err(SketchError::OutOfUniverse { item: x, universe_bits: self.universe_bits });
        }
        // the whole universe is the root interval, which has no level
        if x == universe {
            return Ok(self.total());
        }
        let mut rank = 0;
        let mut node = x;
        for level in &self.levels {
            if node & 1 == 1 {
                rank += level.query(node - 1);
            }
            node >>= 1;
        }
        Ok(rank)
    }

    /// Estimated number of stream items less than or equal to `x`.
    pub fn rank_at_most(&self, x: ItemId) -> Result<u64> {
        self.check_item(x)?;
        self.rank_less(x + 1)
    }

    /// Smallest `x` whose estimated inclusive rank reaches
    /// `max(1, ceil(q * (I - D)))`, found by binary search over the
    /// universe. Returns the last universe element if the target is never
    /// reached.
    pub fn quantile(&self, q: f64) -> Result<ItemId> {
        if !(0.0..=1.0).contains(&q) {
            return Err(invalid(format!("quantile must be in [0, 1], got {q}")));
        }
        let total = self.total();
        if total == 0 {
            return Err(SketchError::Empty);
        }
        let target = ((q * total as f64).ceil() as u64).max(1);
        let (mut lo, mut hi) = (0u64, self.universe_size() - 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.rank_less(mid + 1)? >= target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

impl DssSketch {
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (h, level) in self.levels.iter().enumerate() {
            level.check_invariants().map_err(|e| format!("level {h}: {e}"))?;
        }
        Ok(())
    }
}
