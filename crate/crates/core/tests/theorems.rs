mod common;

use std::collections::BTreeSet;

use bounded_sketch::dyadic::{dss_new, dss_with_capacity};
use bounded_sketch::eval::metrics::ks_divergence;
use bounded_sketch::stream::{
    adversarial_stream, adversarial_stream_against, apply_deletions, gen_binomial, gen_zipf, DeleteOrder,
    DeletionPattern, DeletionPlan,
};
use bounded_sketch::{
    capacity_for, Execution, ExactCounter, ItemId, LinearKind, LinearSketch, SketchConfig, SketchPolicy,
    SpaceSavingSketch, Stream,
};
use common::max_error;

fn zipf_stream(bits: u32, s: f64, inserts: u64, ratio: f64, seed: u64) -> Stream {
    let items = gen_zipf(bits, s, inserts, seed).unwrap();
    let plan = DeletionPlan::new(ratio, DeletionPattern::ShuffledUniform, DeleteOrder::DeletesAfterInserts);
    apply_deletions(bits, items, &plan, seed).unwrap()
}

fn guaranteed(epsilon: f64, alpha: f64, policy: SketchPolicy) -> SpaceSavingSketch {
    SpaceSavingSketch::new(SketchConfig::guaranteed(epsilon, alpha, policy).unwrap()).unwrap()
}

#[test]
fn insert_only_lemmas() {
    let epsilon = 0.02;
    for seed in 0..10 {
        let items = gen_zipf(12, 0.8, 20_000, seed).unwrap();
        let mut s = guaranteed(epsilon, 1.0, SketchPolicy::InsertOnly);
        let mut oracle = ExactCounter::new();
        for &x in &items {
            s.insert(x);
            oracle.apply(bounded_sketch::StreamOp::insert(x)).unwrap();
        }
        let k = s.capacity() as u64;
        let i = items.len() as u64;
        let min = s.min_count().unwrap() as u64;
        assert!(min <= i / k, "min count {min} above I/k");
        let monitored: BTreeSet<ItemId> = s.entries_sorted().iter().map(|e| e.item).collect();
        let mut unmonitored_mass = 0;
        for (x, f) in oracle.support() {
            if f > min {
                assert!(monitored.contains(&x), "item {x} with f={f} > min={min} unmonitored");
            }
            if !monitored.contains(&x) {
                unmonitored_mass += f;
            }
        }
        let error_mass: i64 = s.entries_sorted().iter().map(|e| e.error).sum();
        assert!(error_mass as u64 >= unmonitored_mass);
        let ops: Vec<_> = items.iter().map(|&x| bounded_sketch::StreamOp::insert(x)).collect();
        assert!((max_error(&s, &oracle, &ops) as f64) < epsilon * i as f64);
    }
}

#[test]
fn item_tied_with_min_count_can_be_evicted() {
    let mut s = SpaceSavingSketch::new(SketchConfig::with_capacity(0.5, 1.0, SketchPolicy::InsertOnly, 2).unwrap()).unwrap();
    for x in [0, 1, 2] {
        s.insert(x);
    }
    let min = s.min_count().unwrap();
    let evicted = [0, 1].into_iter().find(|&x| s.raw_entry(x).is_none()).unwrap();
    // the evicted item has f = 1 = minCount
    assert_eq!(min, 1);
    assert_eq!(s.query(evicted), 0);
}

#[test]
fn lazy_underestimates_item_reinserted_after_deletions() {
    let mut s = SpaceSavingSketch::new(SketchConfig::with_capacity(0.5, 2.0, SketchPolicy::LazyDelete, 2).unwrap()).unwrap();
    // 3 evicts 2; deleting 0 twice drops the min count to 0; 2 returns with count 1
    for (x, w) in [(0, 1), (0, 1), (2, 1), (2, 1), (3, 1), (0, -1), (0, -1), (2, 1)] {
        s.update(x, w).unwrap();
    }
    let entry = s.raw_entry(2).unwrap();
    assert_eq!((entry.count, entry.error), (1, 0));
    // f(2) = 3
    assert_eq!(s.query(2), 1);
}

#[test]
fn active_max_error_under_half_epsilon() {
    for (seed, ratio) in [(1, 0.25), (2, 0.5), (3, 0.75)] {
        let stream = zipf_stream(14, 1.0, 50_000, ratio, seed);
        let epsilon = 0.02;
        let live = (stream.inserts() - stream.deletes()) as f64;
        let mut s = guaranteed(epsilon, stream.alpha, SketchPolicy::ActiveDelete);
        for op in &stream.ops {
            s.update(op.item, op.weight()).unwrap();
            assert!((s.max_error().unwrap() as f64) < epsilon / 2.0 * live);
        }
    }
}

#[test]
fn binomial_streams_respect_bounds() {
    for seed in 0..4 {
        let items = gen_binomial(16, 100, 0.5, 30_000, seed).unwrap();
        let plan = DeletionPlan::new(0.5, DeletionPattern::TargetedLeastFrequent, DeleteOrder::Interleaved);
        let stream = apply_deletions(16, items, &plan, seed).unwrap();
        let oracle = ExactCounter::from_ops(&stream.ops).unwrap();
        let live = oracle.f1() as f64;
        for policy in [SketchPolicy::LazyDelete, SketchPolicy::ActiveDelete] {
            let mut s = guaranteed(0.05, stream.alpha, policy);
            for op in &stream.ops {
                s.update(op.item, op.weight()).unwrap();
            }
            assert!((max_error(&s, &oracle, &stream.ops) as f64) < 0.05 * live, "{policy}");
        }
    }
}

fn recall_of(s: &SpaceSavingSketch, truth: &BTreeSet<ItemId>, epsilon: f64) -> f64 {
    let reported: BTreeSet<ItemId> = match s.policy() {
        SketchPolicy::ActiveDelete => s.report_positive(),
        _ => s.report_threshold(epsilon),
    }
    .into_iter()
    .map(|(x, _)| x)
    .collect();
    truth.intersection(&reported).count() as f64 / truth.len() as f64
}

#[test]
fn adversary_defeats_small_sketches() {
    for (epsilon, alpha) in [(0.25, 2.0), (0.1, 2.0), (0.25, 4.0), (0.125, 3.0)] {
        let adv = adversarial_stream(epsilon, alpha).unwrap();
        let oracle = ExactCounter::from_ops(&adv.stream.ops).unwrap();
        let truth = oracle.frequent(epsilon);
        assert!(truth.contains(&adv.spared));
        let small = (alpha / (2.0 * epsilon)).ceil() as usize;
        for policy in [SketchPolicy::LazyDelete, SketchPolicy::ActiveDelete] {
            let mut s = SpaceSavingSketch::new(
                SketchConfig::with_capacity(epsilon, alpha, policy, small).unwrap().permissive(),
            )
            .unwrap();
            let mut full = guaranteed(epsilon, alpha, policy);
            for op in &adv.stream.ops {
                s.update(op.item, op.weight()).unwrap();
                full.update(op.item, op.weight()).unwrap();
            }
            assert_eq!(s.query(adv.spared), 0, "{policy} at eps={epsilon} alpha={alpha}");
            assert!(recall_of(&s, &truth, epsilon) < 1.0);
            assert_eq!(recall_of(&full, &truth, epsilon), 1.0);
        }
    }
}

#[test]
fn adversary_against_selected_probes() {
    let adv = adversarial_stream_against(0.1, 2.0, &[5, 10, 15, 19, 40], None).unwrap();
    assert_eq!(adv.probe_capacities, vec![5, 10, 15, 19]);
    assert!(adversarial_stream_against(0.1, 2.0, &[20, 30], None).is_err());
    assert!(adversarial_stream_against(0.1, 2.0, &[0], None).is_err());
}

#[test]
fn count_min_failure_rate_within_delta() {
    let stream = zipf_stream(16, 1.0, 100_000, 0.5, 4);
    let oracle = ExactCounter::from_ops(&stream.ops).unwrap();
    let live = oracle.f1() as f64;
    let items: BTreeSet<ItemId> = stream.ops.iter().map(|op| op.item).collect();
    let (epsilon, delta) = (0.01, 0.05);
    for kind in [LinearKind::CountMin, LinearKind::CountMedian] {
        let mut failures = 0;
        let mut total = 0;
        for seed in 0..5 {
            let mut sk = LinearSketch::new(kind, epsilon, delta, seed).unwrap();
            for op in &stream.ops {
                sk.update(op.item, op.weight()).unwrap();
            }
            for &x in &items {
                let err = sk.query(x) - oracle.freq(x) as i64;
                if kind == LinearKind::CountMin {
                    assert!(err >= 0);
                    // every row alone already overestimates
                    for row in 0..sk.depth() {
                        let cell = sk.table()[row * sk.width() + sk.row_bucket(row, x)];
                        assert!(cell >= oracle.freq(x) as i64);
                    }
                }
                total += 1;
                if err.unsigned_abs() as f64 > epsilon * live {
                    failures += 1;
                }
            }
        }
        assert!((failures as f64) <= delta * total as f64, "{kind}: {failures}/{total}");
    }
}

#[test]
fn dyadic_levels_match_brute_force_at_exact_capacity() {
    let stream = zipf_stream(8, 0.7, 5_000, 0.5, 11);
    let oracle = ExactCounter::from_ops(&stream.ops).unwrap();
    let mut dss = dss_with_capacity(8, 0.5, 2.0, 256).unwrap();
    for op in &stream.ops {
        dss.update(op.item, op.weight()).unwrap();
    }
    for (h, level) in dss.levels().iter().enumerate() {
        for node in 0..(256u64 >> h) {
            let brute: u64 = oracle.support().filter(|&(x, _)| x >> h == node).map(|(_, c)| c).sum();
            assert_eq!(level.query(node), brute, "level {h} node {node}");
        }
    }
    let dev = ks_divergence(Execution::Sequential, |x| dss.rank_less(x).unwrap(), &oracle, 8).unwrap();
    assert_eq!(dev.max_abs, 0);
}

#[test]
fn dyadic_guarantee_on_small_universe() {
    let epsilon = 0.1;
    for seed in 0..3 {
        let stream = zipf_stream(12, 1.0, 40_000, 0.5, seed);
        let oracle = ExactCounter::from_ops(&stream.ops).unwrap();
        let mut dss = dss_new(12, epsilon, stream.alpha).unwrap();
        assert_eq!(
            dss.levels()[0].capacity(),
            capacity_for(epsilon / 12.0, stream.alpha, SketchPolicy::ActiveDelete).unwrap()
        );
        dss.extend(Execution::Parallel, &stream.weighted()).unwrap();
        let dev = ks_divergence(Execution::Parallel, |x| dss.rank_less(x).unwrap(), &oracle, 12).unwrap();
        assert!(dev.ks <= epsilon, "seed {seed}: ks {}", dev.ks);
    }
}
