use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Stream, StreamOp};
use crate::error::{invalid, Result};
use crate::rng::{self, streams};
use crate::ItemId;

/// Which insertion occurrences become deletions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionPattern {
    /// `D` occurrences sampled uniformly without replacement.
    #[default]
    ShuffledUniform,
    /// Repeatedly delete the item with the smallest remaining positive
    /// frequency, ties to the smaller id.
    TargetedLeastFrequent,
}

/// Where deletions are placed relative to the insertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeleteOrder {
    #[default]
    DeletesAfterInserts,
    /// Each deletion lands uniformly at random after the insertion it cancels.
    Interleaved,
}

impl fmt::Display for DeletionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeletionPattern::ShuffledUniform => "shuffled",
            DeletionPattern::TargetedLeastFrequent => "targeted",
        })
    }
}

impl fmt::Display for DeleteOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeleteOrder::DeletesAfterInserts => "after",
            DeleteOrder::Interleaved => "interleaved",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeletionPlan {
    /// Delete:insert ratio, `D = floor(ratio * I)`.
    pub ratio: f64,
    #[serde(default)]
    pub pattern: DeletionPattern,
    #[serde(default)]
    pub order: DeleteOrder,
}

impl DeletionPlan {
    pub fn new(ratio: f64, pattern: DeletionPattern, order: DeleteOrder) -> Self {
        Self { ratio, pattern, order }
    }
}

/// Turns a list of insertions into a strict bounded-deletion stream.
///
/// Every deletion cancels a specific earlier insertion, so every prefix of
/// the result keeps all frequencies nonnegative. `alpha` is set to
/// `I / (I - D)`.
pub fn apply_deletions(universe_bits: u32, inserts: Vec<ItemId>, plan: &DeletionPlan, seed: u64) -> Result<Stream> {
    if !(plan.ratio >= 0.0 && plan.ratio < 1.0) {
        return Err(invalid(format!("delete ratio must be in [0, 1), got {}", plan.ratio)));
    }
    let num_inserts = inserts.len();
    let num_deletes = (plan.ratio * num_inserts as f64).floor() as usize;
    let mut rng = rng::seeded(seed, streams::DELETIONS);

    // positions (into `inserts`) of the occurrences being deleted
    let mut victims: Vec<usize> = match plan.pattern {
        DeletionPattern::ShuffledUniform => {
            let mut picked = index::sample(&mut rng, num_inserts, num_deletes).into_vec();
            picked.shuffle(&mut rng);
            picked
        }
        DeletionPattern::TargetedLeastFrequent => targeted_victims(&inserts, num_deletes),
    };

    let alpha = if num_inserts == num_deletes {
        f64::INFINITY
    } else {
        num_inserts as f64 / (num_inserts - num_deletes) as f64
    };

    let mut ops: Vec<StreamOp> = Vec::with_capacity(num_inserts + num_deletes);
    match plan.order {
        DeleteOrder::DeletesAfterInserts => {
            ops.extend(inserts.iter().map(|&x| StreamOp::insert(x)));
            ops.extend(victims.iter().map(|&p| StreamOp::delete(inserts[p])));
        }
        DeleteOrder::Interleaved => {
            let mut order_rng = rng::seeded(seed, streams::ORDERING);
            // gap g means "after the first g insertions"; victim p needs g > p
            let mut placed: Vec<(usize, u64, ItemId)> = victims
                .drain(..)
                .map(|p| {
                    let gap = order_rng.random_range(p + 1..=num_inserts);
                    (gap, order_rng.random::<u64>(), inserts[p])
                })
                .collect();
            placed.sort_unstable();
            let mut next = placed.into_iter().peekable();
            for (i, &x) in inserts.iter().enumerate() {
                ops.push(StreamOp::insert(x));
                while let Some(&(gap, _, item)) = next.peek() {
                    if gap != i + 1 {
                        break;
                    }
                    ops.push(StreamOp::delete(item));
                    next.next();
                }
            }
        }
    }

    Ok(Stream::new(universe_bits, alpha, seed, ops))
}

/// Deletion victims for the targeted pattern: one occurrence at a time of
/// the currently least frequent item, latest occurrence first.
fn targeted_victims(inserts: &[ItemId], num_deletes: usize) -> Vec<usize> {
    let mut occurrences: HashMap<ItemId, Vec<usize>> = HashMap::new();
    for (p, &x) in inserts.iter().enumerate() {
        occurrences.entry(x).or_default().push(p);
    }
    let mut by_freq: BTreeSet<(usize, ItemId)> = occurrences.iter().map(|(&x, occ)| (occ.len(), x)).collect();
    let mut victims = Vec::with_capacity(num_deletes);
    while victims.len() < num_deletes {
        let Some((freq, item)) = by_freq.pop_first() else { break };
        let occ = occurrences.get_mut(&item).expect("tracked item");
        victims.push(occ.pop().expect("positive frequency"));
        if freq > 1 {
            by_freq.insert((freq - 1, item));
        }
    }
    victims
}
