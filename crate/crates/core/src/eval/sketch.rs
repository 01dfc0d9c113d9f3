//! Sketch descriptors used by experiments and the CLI, and a runtime
//! wrapper over every sketch family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dyadic::{dcs_new, dcs_with_dimensions, dss_new, dss_with_capacity, DcsSketch, DssSketch};
use crate::error::{invalid, Result, SketchError};
use crate::linear::{dimensions, LinearKind, LinearSketch};
use crate::par::Execution;
use crate::spacesaving::{capacity_for, SketchConfig, SketchPolicy, SpaceSavingSketch};
use crate::stream::{Stream, StreamOp};
use crate::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchKind {
    Ss,
    Lazy,
    Ssp,
    Cm,
    Cmedian,
    Dss,
    Dcs,
}

impl SketchKind {
    pub const ALL: [SketchKind; 7] = [
        SketchKind::Ss,
        SketchKind::Lazy,
        SketchKind::Ssp,
        SketchKind::Cm,
        SketchKind::Cmedian,
        SketchKind::Dss,
        SketchKind::Dcs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Ss => "ss",
            SketchKind::Lazy => "lazy",
            SketchKind::Ssp => "ssp",
            SketchKind::Cm => "cm",
            SketchKind::Cmedian => "cmedian",
            SketchKind::Dss => "dss",
            SketchKind::Dcs => "dcs",
        }
    }

    pub fn counter_policy(self) -> Option<SketchPolicy> {
        match self {
            SketchKind::Ss => Some(SketchPolicy::InsertOnly),
            SketchKind::Lazy => Some(SketchPolicy::LazyDelete),
            SketchKind::Ssp => Some(SketchPolicy::ActiveDelete),
            _ => None,
        }
    }

    pub fn is_rank_sketch(self) -> bool {
        matches!(self, SketchKind::Dss | SketchKind::Dcs)
    }
}

impl fmt::Display for SketchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SketchKind {
    type Err = SketchError;

    fn from_str(s: &str) -> Result<Self> {
        SketchKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown sketch '{s}'")))
    }
}

/// One sketch configuration inside an experiment.
///
/// `counters` overrides the sizing formulas: the number of counters for
/// counter-based sketches, the total cell budget for linear sketches, and
/// the per-level value of either for the dyadic sketches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchSpec {
    pub kind: SketchKind,
    pub epsilon: f64,
    /// Defaults to the stream's declared alpha.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Defaults to `2^-universe_bits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counters: Option<usize>,
}

impl SketchSpec {
    pub fn new(kind: SketchKind, epsilon: f64) -> Self {
        Self { kind, epsilon, alpha: None, delta: None, counters: None }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn counters(mut self, counters: usize) -> Self {
        self.counters = Some(counters);
        self
    }

    pub fn resolved_alpha(&self, stream_alpha: f64) -> f64 {
        match self.kind {
            SketchKind::Ss => 1.0,
            _ => self.alpha.unwrap_or(stream_alpha),
        }
    }

    pub fn resolved_delta(&self, universe_bits: u32) -> f64 {
        self.delta.unwrap_or_else(|| 0.5f64.powi(universe_bits as i32))
    }

    pub fn build(&self, universe_bits: u32, stream_alpha: f64, seed: u64) -> Result<AnySketch> {
        let alpha = self.resolved_alpha(stream_alpha);
        let delta = self.resolved_delta(universe_bits);
        let sketch = match self.kind {
            SketchKind::Ss | SketchKind::Lazy | SketchKind::Ssp => {
                let policy = self.kind.counter_policy().expect("counter kind");
                let config = match self.counters {
                    Some(k) => SketchConfig::with_capacity(self.epsilon, alpha, policy, k)?,
                    None => SketchConfig::guaranteed(self.epsilon, alpha, policy)?,
                };
                AnySketch::Counter(SpaceSavingSketch::new(config)?)
            }
            SketchKind::Cm | SketchKind::Cmedian => {
                let kind = if self.kind == SketchKind::Cm { LinearKind::CountMin } else { LinearKind::CountMedian };
                AnySketch::Linear(linear_with_budget(kind, self.epsilon, delta, self.counters, seed)?)
            }
            SketchKind::Dss => {
                let s = match self.counters {
                    Some(k) => dss_with_capacity(universe_bits, self.epsilon, alpha, k)?,
                    None => dss_new(universe_bits, self.epsilon, alpha)?,
                };
                AnySketch::Dss(s)
            }
            SketchKind::Dcs => {
                let s = match self.counters {
                    Some(budget) => {
                        let l = universe_bits as f64;
                        let (_, depth) = dimensions(LinearKind::CountMedian, self.epsilon / l, delta / l)?;
                        dcs_with_dimensions(universe_bits, depth, (budget / depth).max(1), seed)?
                    }
                    None => dcs_new(universe_bits, self.epsilon, delta, seed)?,
                };
                AnySketch::Dcs(s)
            }
        };
        Ok(sketch)
    }

    /// Whether the sketch built for a stream with measured `alpha` is sized
    /// so that the accuracy theorems apply.
    pub fn is_guarantee_grade(&self, universe_bits: u32, measured_alpha: f64) -> bool {
        if !measured_alpha.is_finite() {
            return false;
        }
        let alpha_ok = self.alpha.is_none_or(|a| a >= measured_alpha - 1e-12);
        let needed = match self.kind {
            SketchKind::Ss if measured_alpha > 1.0 => return false,
            SketchKind::Ss | SketchKind::Lazy | SketchKind::Ssp => {
                capacity_for(self.epsilon, measured_alpha, self.kind.counter_policy().unwrap())
            }
            SketchKind::Dss => capacity_for(
                self.epsilon / universe_bits as f64,
                measured_alpha,
                SketchPolicy::ActiveDelete,
            ),
            _ => return false,
        };
        match (needed, self.counters) {
            (Ok(k), Some(c)) => c >= k,
            (Ok(_), None) => alpha_ok,
            (Err(_), _) => false,
        }
    }
}

fn linear_with_budget(kind: LinearKind, epsilon: f64, delta: f64, budget: Option<usize>, seed: u64) -> Result<LinearSketch> {
    match budget {
        Some(cells) => {
            let (_, depth) = dimensions(kind, epsilon, delta)?;
            let depth = depth.min(cells.max(1));
            LinearSketch::with_dimensions(kind, depth, (cells / depth).max(1), seed)
        }
        None => LinearSketch::new(kind, epsilon, delta, seed),
    }
}

/// Any sketch the harness can run.
#[derive(Debug, Clone)]
pub enum AnySketch {
    Counter(SpaceSavingSketch),
    Linear(LinearSketch),
    Dss(DssSketch),
    Dcs(DcsSketch),
}

const DYADIC_BATCH: usize = 1 << 16;

impl AnySketch {
    pub fn name(&self) -> String {
        match self {
            AnySketch::Counter(s) => s.policy().short_name().to_string(),
            AnySketch::Linear(s) => s.kind().short_name().to_string(),
            AnySketch::Dss(_) => "dss".to_string(),
            AnySketch::Dcs(_) => "dcs".to_string(),
        }
    }

    pub fn policy_name(&self) -> String {
        match self {
            AnySketch::Counter(s) => s.policy().to_string(),
            AnySketch::Linear(s) => s.kind().to_string(),
            AnySketch::Dss(_) => "DyadicActiveDelete".to_string(),
            AnySketch::Dcs(_) => "DyadicCountMedian".to_string(),
        }
    }

    pub fn counters(&self) -> usize {
        match self {
            AnySketch::Counter(s) => s.capacity(),
            AnySketch::Linear(s) => s.cells(),
            AnySketch::Dss(s) => s.counters(),
            AnySketch::Dcs(s) => s.counters(),
        }
    }

    pub fn space_bits(&self) -> u64 {
        match self {
            AnySketch::Counter(s) => s.space_bits(),
            AnySketch::Linear(s) => s.space_bits(),
            AnySketch::Dss(s) => s.space_bits(),
            AnySketch::Dcs(s) => s.space_bits(),
        }
    }

    pub fn violations(&self) -> u64 {
        match self {
            AnySketch::Counter(s) => s.violations(),
            AnySketch::Dss(s) => s.levels().iter().map(SpaceSavingSketch::violations).sum(),
            _ => 0,
        }
    }

    pub fn update(&mut self, op: StreamOp) -> Result<()> {
        let w = op.weight();
        match self {
            AnySketch::Counter(s) => s.update(op.item, w),
            AnySketch::Linear(s) => s.update(op.item, w),
            AnySketch::Dss(s) => s.update(op.item, w),
            AnySketch::Dcs(s) => s.update(op.item, w),
        }
    }

    /// Feeds a whole stream; dyadic sketches fan their levels out per batch.
    pub fn feed(&mut self, exec: Execution, stream: &Stream) -> Result<()> {
        match self {
            AnySketch::Dss(s) => feed_dyadic(s, exec, &stream.ops),
            AnySketch::Dcs(s) => feed_dyadic(s, exec, &stream.ops),
            _ => stream.ops.iter().try_for_each(|&op| self.update(op)),
        }
    }

    /// Point estimate used for MSE; rank sketches answer from level 0.
    pub fn estimate(&self, item: ItemId) -> i64 {
        match self {
            AnySketch::Counter(s) => s.query(item) as i64,
            AnySketch::Linear(s) => s.query(item),
            AnySketch::Dss(s) => s.levels()[0].query(item) as i64,
            AnySketch::Dcs(s) => s.levels()[0].query(item),
        }
    }

    pub fn rank_less(&self, x: u64) -> Option<u64> {
        match self {
            AnySketch::Dss(s) => s.rank_less(x).ok(),
            AnySketch::Dcs(s) => s.rank_less(x).ok(),
            _ => None,
        }
    }

    pub fn quantile(&self, q: f64) -> Option<Result<ItemId>> {
        match self {
            AnySketch::Dss(s) => Some(s.quantile(q)),
            AnySketch::Dcs(s) => Some(s.quantile(q)),
            _ => None,
        }
    }

    pub fn as_counter(&self) -> Option<&SpaceSavingSketch> {
        match self {
            AnySketch::Counter(s) => Some(s),
            _ => None,
        }
    }
}

fn feed_dyadic<E: crate::dyadic::FrequencyEstimator>(
    sketch: &mut crate::dyadic::DyadicSketch<E>,
    exec: Execution,
    ops: &[StreamOp],
) -> Result<()> {
    for chunk in ops.chunks(DYADIC_BATCH) {
        let batch: Vec<(ItemId, i64)> = chunk.iter().map(|op| (op.item, op.weight())).collect();
        sketch.extend(exec, &batch)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for kind in SketchKind::ALL {
            assert_eq!(kind.name().parse::<SketchKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<SketchKind>().is_err());
    }

    #[test]
    fn budgets() {
        let cm = SketchSpec::new(SketchKind::Cm, 0.01).counters(800).build(16, 2.0, 1).unwrap();
        // depth ceil(ln 2^16) = 12, width floor(800 / 12) = 66
        assert_eq!(cm.counters(), 12 * 66);
        let ssp = SketchSpec::new(SketchKind::Ssp, 0.01).build(16, 2.0, 1).unwrap();
        assert_eq!(ssp.counters(), 400);
        assert_eq!(ssp.space_bits(), 400 * 128);
        let ss = SketchSpec::new(SketchKind::Ss, 0.01).build(16, 2.0, 1).unwrap();
        assert_eq!(ss.counters(), 100);
    }

    #[test]
    fn guarantee_grade() {
        let lazy = SketchSpec::new(SketchKind::Lazy, 0.1);
        assert!(lazy.is_guarantee_grade(16, 2.0));
        assert!(!lazy.counters(19).is_guarantee_grade(16, 2.0));
        assert!(lazy.counters(20).is_guarantee_grade(16, 2.0));
        assert!(!lazy.alpha(1.5).is_guarantee_grade(16, 2.0));
        assert!(!SketchSpec::new(SketchKind::Cm, 0.1).is_guarantee_grade(16, 1.0));
        assert!(!SketchSpec::new(SketchKind::Ss, 0.1).is_guarantee_grade(16, 2.0));
        assert!(SketchSpec::new(SketchKind::Dss, 0.1).is_guarantee_grade(16, 2.0));
    }
}
