mod support;

use proptest::prelude::*;
use semwalk::cooc::{build_from_traces, CoocGraph};
use semwalk::substrate::{generate_erdos_renyi, generate_watts_strogatz, SubstrateGraph};
use semwalk::walker::{run_ensemble, LengthSpec, WalkConfig, WalkTrace};
use support::naive;

fn substrate(kind: u8, n: usize, seed: u64) -> SubstrateGraph {
    match kind {
        0 => generate_watts_strogatz(n, 4, 0.2, seed).unwrap(),
        _ => generate_erdos_renyi(n, 3.0, seed).unwrap(),
    }
}

/// Random substrate (at most 200 nodes) and ensemble (at most 1000 walks).
fn ensemble(kind: u8, n: usize, n_rw: u64, b: f64, seed: u64, count_origin: bool) -> (Vec<WalkTrace>, Vec<(u32, u64)>) {
    let g = substrate(kind, n, seed);
    let origin = (0..g.node_count() as u32).find(|&v| g.degree(v) > 0).unwrap_or(0);
    let mut cfg = WalkConfig::new(origin, n_rw, LengthSpec::PowerLaw { b, l_min: 1, l_max: 60 }, seed);
    cfg.count_origin = count_origin;
    let e = run_ensemble(&g, &cfg).unwrap();
    (e.traces, e.frequencies.nonzero().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn builders_and_observables_match_references(
        kind in 0u8..2, n in 10usize..200, n_rw in 0u64..1000, b in 1.5f64..3.5, seed in any::<u64>(), count_origin in any::<bool>(),
    ) {
        let (traces, freq) = ensemble(kind, n, n_rw, b, seed, count_origin);
        if let Err(e) = naive::check_ensemble(&traces, count_origin, &freq) {
            prop_assert!(false, "{}", e);
        }
    }

    #[test]
    fn total_weight_accounting(n in 10usize..120, n_rw in 0u64..400, seed in any::<u64>(), count_origin in any::<bool>()) {
        let (traces, _) = ensemble(0, n, n_rw, 2.5, seed, count_origin);
        let g = build_from_traces(&traces, count_origin);
        let expected: u64 = traces.iter().map(|t| {
            let m = t.distinct_nodes(count_origin).len() as u64;
            m * m.saturating_sub(1) / 2
        }).sum();
        prop_assert_eq!(g.total_weight(), expected);
    }

    #[test]
    fn split_and_merge(n in 10usize..120, n_rw in 0u64..300, seed in any::<u64>(), cut1 in 0usize..300, cut2 in 0usize..300) {
        let (traces, _) = ensemble(1, n, n_rw, 2.5, seed, true);
        let (c1, c2) = (cut1.min(cut2).min(traces.len()), cut1.max(cut2).min(traces.len()));
        let whole = build_from_traces(&traces, true);
        let a = build_from_traces(&traces[..c1], true);
        let b = build_from_traces(&traces[c1..c2], true);
        let c = build_from_traces(&traces[c2..], true);
        prop_assert_eq!(&a.clone().merge(b.clone()).merge(c.clone()), &whole);
        prop_assert_eq!(&a.clone().merge(b.clone().merge(c.clone())), &whole);
        prop_assert_eq!(a.clone().merge(b.clone()), b.merge(a.clone()));
        prop_assert_eq!(a.clone().merge(CoocGraph::new()), a);
    }
}
