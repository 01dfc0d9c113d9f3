mod common;

use bounded_sketch::dyadic::dss_with_capacity;
use bounded_sketch::stream::{read_stream, write_stream};
use bounded_sketch::{
    capacity_for, ExactCounter, LinearKind, LinearSketch, SketchConfig, SketchPolicy, SpaceSavingSketch, Stream,
    StreamOp,
};
use common::{counts, max_error, sketch, strict_ops};
use proptest::prelude::*;

fn choices(universe: u64, len: usize) -> impl Strategy<Value = Vec<(u64, bool)>> {
    prop::collection::vec((0..universe, prop::bool::weighted(0.4)), 0..len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn active_conserves_mass(ch in choices(40, 400), k in 1usize..12) {
        let ops = strict_ops(&ch);
        let (i, d) = counts(&ops);
        let mut s = sketch(SketchPolicy::ActiveDelete, k);
        for op in &ops {
            s.update(op.item, op.weight()).unwrap();
            s.check_invariants().map_err(TestCaseError::fail)?;
        }
        let total: i64 = s.entries_sorted().iter().map(|e| e.count).sum();
        prop_assert_eq!(total, (i - d) as i64);
        prop_assert!(s.entries_sorted().iter().all(|e| e.error >= 0));
    }

    #[test]
    fn lazy_never_underestimates_monitored_when_inserts_come_first(ch in choices(40, 400), k in 1usize..12) {
        let mut ops = strict_ops(&ch);
        // every prefix stays strict when all inserts move ahead of all deletes
        ops.sort_by_key(|op| op.weight() < 0);
        let mut s = sketch(SketchPolicy::LazyDelete, k);
        let mut oracle = ExactCounter::new();
        for op in &ops {
            s.update(op.item, op.weight()).unwrap();
            oracle.apply(*op).unwrap();
            s.check_invariants().map_err(TestCaseError::fail)?;
        }
        for e in s.entries_sorted() {
            prop_assert!(e.count >= oracle.freq(e.item) as i64, "{:?} vs f={}", e, oracle.freq(e.item));
        }
    }

    #[test]
    fn guarantee_capacity_bounds_error(ch in choices(64, 600), eps_index in 0usize..3) {
        let epsilon = [0.5, 0.25, 0.1][eps_index];
        let ops = strict_ops(&ch);
        let (i, d) = counts(&ops);
        prop_assume!(i > d);
        let alpha = i as f64 / (i - d) as f64;
        let oracle = ExactCounter::from_ops(&ops).unwrap();
        for policy in [SketchPolicy::LazyDelete, SketchPolicy::ActiveDelete] {
            let mut s = SpaceSavingSketch::new(SketchConfig::guaranteed(epsilon, alpha, policy).unwrap()).unwrap();
            for op in &ops {
                s.update(op.item, op.weight()).unwrap();
            }
            let err = max_error(&s, &oracle, &ops);
            prop_assert!(err as f64 <= epsilon * (i - d) as f64, "{policy}: {err} with k={}", s.capacity());
        }
    }

    #[test]
    fn count_min_never_underestimates(ch in choices(1000, 500), seed in any::<u64>()) {
        let ops = strict_ops(&ch);
        let oracle = ExactCounter::from_ops(&ops).unwrap();
        let mut cm = LinearSketch::with_dimensions(LinearKind::CountMin, 3, 16, seed).unwrap();
        for op in &ops {
            cm.update(op.item, op.weight()).unwrap();
        }
        for op in &ops {
            prop_assert!(cm.query(op.item) >= oracle.freq(op.item) as i64);
        }
    }

    #[test]
    fn linear_tables_ignore_order(ch in choices(1000, 300), seed in any::<u64>(), rotate in 0usize..300) {
        let ops = strict_ops(&ch);
        prop_assume!(!ops.is_empty());
        for kind in [LinearKind::CountMin, LinearKind::CountMedian] {
            let mut a = LinearSketch::with_dimensions(kind, 5, 32, seed).unwrap();
            let mut b = a.clone();
            for op in &ops {
                a.update(op.item, op.weight()).unwrap();
            }
            let mut shifted = ops.clone();
            shifted.rotate_left(rotate % ops.len());
            for op in &shifted {
                b.update(op.item, op.weight()).unwrap();
            }
            prop_assert_eq!(a.table(), b.table());
        }
    }

    #[test]
    fn stream_file_round_trip(ch in choices(1 << 20, 200), alpha in 1.0f64..100.0, seed in any::<u64>()) {
        let stream = Stream::new(20, alpha, seed, strict_ops(&ch));
        let mut buf = Vec::new();
        write_stream(&stream, &mut buf).unwrap();
        let back = read_stream(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &stream);
        let mut again = Vec::new();
        write_stream(&back, &mut again).unwrap();
        prop_assert_eq!(buf, again);
    }

    #[test]
    fn dyadic_ranks_monotone(ch in choices(256, 400), k in 1usize..8) {
        let ops = strict_ops(&ch);
        let (i, d) = counts(&ops);
        let mut dss = dss_with_capacity(8, 0.5, 2.0, k).unwrap();
        for op in &ops {
            dss.update(op.item, op.weight()).unwrap();
        }
        dss.check_invariants().map_err(TestCaseError::fail)?;
        let ranks: Vec<u64> = (0..=256).map(|x| dss.rank_less(x).unwrap()).collect();
        prop_assert_eq!(ranks[0], 0);
        prop_assert_eq!(ranks[256], i - d);
    }

    #[test]
    fn dyadic_exact_capacity_matches_oracle(ch in choices(64, 300)) {
        let ops = strict_ops(&ch);
        let oracle = ExactCounter::from_ops(&ops).unwrap();
        // 64 counters per level hold every node of a 2^6 universe
        let mut dss = dss_with_capacity(6, 0.5, 2.0, 64).unwrap();
        for op in &ops {
            dss.update(op.item, op.weight()).unwrap();
        }
        let truth = oracle.prefix_ranks(6);
        for x in 0..=64u64 {
            prop_assert_eq!(dss.rank_less(x).unwrap(), truth[x as usize]);
        }
        if oracle.f1() > 0 {
            let median = dss.quantile(0.5).unwrap();
            let target = (oracle.f1() as f64 * 0.5).ceil() as u64;
            prop_assert!(truth[median as usize + 1] >= target.max(1));
            prop_assert!(median == 0 || truth[median as usize] < target.max(1));
        }
    }

    #[test]
    fn capacity_formula_is_ceiling(eps in 0.001f64..1.0, alpha in 1.0f64..50.0) {
        let lazy = capacity_for(eps, alpha, SketchPolicy::LazyDelete).unwrap();
        let active = capacity_for(eps, alpha, SketchPolicy::ActiveDelete).unwrap();
        prop_assert!(lazy as f64 >= alpha / eps - 1e-6 && (lazy as f64) < alpha / eps + 1.0);
        prop_assert!(active as f64 >= 2.0 * alpha / eps - 1e-6 && (active as f64) < 2.0 * alpha / eps + 1.0);
    }
}

#[test]
fn strict_ops_helper_is_strict() {
    let ops = strict_ops(&[(1, true), (1, false), (2, false), (0, true), (0, true), (0, true)]);
    assert_eq!(ops[0], StreamOp::insert(1));
    assert!(ExactCounter::from_ops(&ops).is_ok());
}
