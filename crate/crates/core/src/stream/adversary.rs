//! Lower-bound construction for counter-based sketches.
//!
//! `alpha / epsilon` distinct items are inserted in equal blocks of `m`.
//! Then `(1 - 1/alpha) I` deletions fully remove items that probe sketches
//! monitor, sparing one item `u` that no probe with fewer than
//! `alpha / epsilon` counters monitors. After the deletions `u` still has
//! frequency `m = epsilon (I - D)`, so it is frequent, yet every such sketch
//! estimates it as 0.

use std::collections::BTreeSet;

use super::{Stream, StreamOp};
use crate::error::{invalid, Result};
use crate::spacesaving::{validate_alpha, validate_epsilon, SketchConfig, SketchPolicy, SpaceSavingSketch};
use crate::ItemId;

/// An adversarial stream with the facts needed to check it.
#[derive(Debug, Clone)]
pub struct AdversarialStream {
    pub stream: Stream,
    /// Number of distinct items, `alpha / epsilon`.
    pub items: usize,
    /// Frequency of every item after insertion.
    pub multiplicity: u64,
    /// The frequent item left unmonitored by the probes.
    pub spared: ItemId,
    /// Probe capacities `spared` is unmonitored under.
    pub probe_capacities: Vec<usize>,
}

fn integral(x: f64) -> Option<u64> {
    let r = x.round();
    ((x - r).abs() <= 1e-9 * x.abs().max(1.0) && r >= 0.0).then_some(r as u64)
}

fn item_count(epsilon: f64, alpha: f64) -> Result<usize> {
    validate_epsilon(epsilon)?;
    validate_alpha(alpha)?;
    match integral(alpha / epsilon) {
        Some(n) if n >= 2 => Ok(n as usize),
        _ => Err(invalid(format!(
            "alpha / epsilon must be an integer >= 2, got {}",
            alpha / epsilon
        ))),
    }
}

/// Smallest block size `m` with `(1 - 1/alpha) * n * m` integral.
fn smallest_multiplicity(n: usize, alpha: f64) -> Result<u64> {
    (1..=1_000_000u64)
        .find(|&m| integral((1.0 - 1.0 / alpha) * (n as u64 * m) as f64).is_some())
        .ok_or_else(|| invalid(format!("no block size makes (1 - 1/{alpha}) * I integral")))
}

fn unmonitored_after(inserts: &[ItemId], n: usize, capacity: usize) -> BTreeSet<ItemId> {
    let config = SketchConfig::with_capacity(1.0, 1.0, SketchPolicy::InsertOnly, capacity).expect("valid probe");
    let mut probe = SpaceSavingSketch::new(config).expect("valid probe");
    for &x in inserts {
        probe.insert(x);
    }
    (0..n as ItemId).filter(|&x| probe.raw_entry(x).is_none()).collect()
}

fn build(epsilon: f64, alpha: f64, multiplicity: Option<u64>, probes: Vec<usize>) -> Result<AdversarialStream> {
    let n = item_count(epsilon, alpha)?;
    let m = match multiplicity {
        Some(m) if m >= 1 => m,
        Some(_) => return Err(invalid("multiplicity must be at least 1")),
        None => smallest_multiplicity(n, alpha)?,
    };
    let total = n as u64 * m;
    let num_deletes = integral((1.0 - 1.0 / alpha) * total as f64)
        .ok_or_else(|| invalid(format!("(1 - 1/alpha) * {total} is not an integer")))?;

    let inserts: Vec<ItemId> = (0..n as ItemId).flat_map(|x| std::iter::repeat_n(x, m as usize)).collect();

    // all probes leave `spared` unmonitored
    let mut candidates: BTreeSet<ItemId> = (0..n as ItemId).collect();
    for &k in &probes {
        let free = unmonitored_after(&inserts, n, k);
        candidates = candidates.intersection(&free).copied().collect();
    }
    let spared = *candidates.first().ok_or_else(|| {
        invalid(format!("no item is unmonitored by every probe capacity in {probes:?}"))
    })?;

    // delete whole items, heaviest-monitored first for the largest probe
    let largest = probes.iter().copied().max().unwrap_or(1);
    let free_in_largest = unmonitored_after(&inserts, n, largest);
    let mut targets: Vec<ItemId> = (0..n as ItemId)
        .filter(|&x| x != spared && !free_in_largest.contains(&x))
        .rev()
        .collect();
    targets.extend((0..n as ItemId).filter(|&x| x != spared && free_in_largest.contains(&x)));

    let mut ops: Vec<StreamOp> = inserts.iter().map(|&x| StreamOp::insert(x)).collect();
    let mut remaining = num_deletes;
    for x in targets {
        let take = remaining.min(m);
        ops.extend(std::iter::repeat_n(StreamOp::delete(x), take as usize));
        remaining -= take;
        if remaining == 0 {
            break;
        }
    }
    debug_assert_eq!(remaining, 0);

    let universe_bits = (usize::BITS - (n - 1).leading_zeros()).max(1);
    let stream = Stream::new(universe_bits, total as f64 / (total - num_deletes) as f64, 0, ops)
        .with_generator(format!("adversary/epsilon={epsilon}/alpha={alpha}/m={m}"));
    Ok(AdversarialStream { stream, items: n, multiplicity: m, spared, probe_capacities: probes })
}

/// Stream that defeats every counter-based configuration with fewer than
/// `alpha / epsilon` counters. Uses the smallest valid block size.
pub fn adversarial_stream(epsilon: f64, alpha: f64) -> Result<AdversarialStream> {
    let n = item_count(epsilon, alpha)?;
    build(epsilon, alpha, None, (1..n).collect())
}

/// Stream built against probes of the listed capacities, with an optional
/// explicit block size.
pub fn adversarial_stream_against(
    epsilon: f64,
    alpha: f64,
    probe_capacities: &[usize],
    multiplicity: Option<u64>,
) -> Result<AdversarialStream> {
    let n = item_count(epsilon, alpha)?;
    if probe_capacities.contains(&0) {
        return Err(invalid("probe capacity must be at least 1"));
    }
    let probes: Vec<usize> = probe_capacities.iter().copied().filter(|&k| k < n).collect();
    if probes.is_empty() {
        return Err(invalid(format!("no probe capacity below alpha / epsilon = {n}")));
    }
    build(epsilon, alpha, multiplicity, probes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ExactCounter;

    #[test]
    fn shape_of_construction() {
        let adv = adversarial_stream(0.25, 2.0).unwrap();
        assert_eq!(adv.items, 8);
        let s = &adv.stream;
        assert_eq!(s.inserts(), 8 * adv.multiplicity);
        assert_eq!(s.deletes() * 2, s.inserts());
        assert_eq!(s.alpha, 2.0);
        let oracle = ExactCounter::from_ops(&s.ops).unwrap();
        assert_eq!(oracle.freq(adv.spared), adv.multiplicity);
        // spared item sits exactly at the epsilon (I - D) threshold
        assert!(oracle.frequent(0.25).contains(&adv.spared));
    }

    #[test]
    fn rejects_non_integral_item_count() {
        assert!(adversarial_stream(0.3, 2.0).is_err());
        assert!(adversarial_stream(1.0, 1.0).is_err());
    }

    #[test]
    fn explicit_multiplicity() {
        let adv = adversarial_stream_against(0.25, 2.0, &[4], Some(10)).unwrap();
        assert_eq!(adv.stream.inserts(), 80);
        assert_eq!(adv.stream.deletes(), 40);
    }
}
