use proptest::prelude::*;

use marll_core::convergence::{Cooling, Period};
use marll_core::engine::{Action, AgentState, QTable};
use marll_core::graph::{all_pairs_hop_distance, parse_json_graph, to_json_graph};
use marll_core::{Graph, Point};

fn graph() -> impl Strategy<Value = Graph> {
    (1usize..12).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn temperature_is_geometric_and_non_increasing(
        initial in 0.1f64..100.0,
        factor in 0.05f64..0.99,
        period in 1u64..500,
        t in 0u64..20_000,
    ) {
        let c = Cooling { initial, factor, period: Period::Iterations(period), min_period: 1 };
        let p = c.period_for(10, 10);
        prop_assert_eq!(p, period);
        let now = c.temperature(t, p);
        prop_assert!(c.temperature(t + 1, p) <= now);
        prop_assert!(now <= initial);
        let expected = initial * factor.powf((t / period) as f64);
        prop_assert!((now - expected).abs() <= 1e-12 * initial);
    }

    #[test]
    fn q_values_stay_within_reward_bound(
        updates in proptest::collection::vec((0u8..9, 0usize..9, 0u8..9, -50.0f64..50.0), 1..400),
        alpha in 0.01f64..1.0,
        gamma in 0.0f64..0.95,
    ) {
        let bound = 50.0 / (1.0 - gamma);
        let mut q = QTable::default();
        for (s, a, next, r) in updates {
            let s = AgentState::new(s).unwrap();
            let next = AgentState::new(next).unwrap();
            q.update(s, Action::ALL[a], next, r, alpha, gamma).unwrap();
            prop_assert!(q.is_finite());
            prop_assert!(q.max_abs() <= bound + 1e-9);
        }
    }

    #[test]
    fn json_graph_round_trips(g in graph(), coords in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 12)) {
        let positions: Vec<Point> = coords[..g.node_count()].iter().map(|&(x, y)| Point::new(x, y)).collect();
        let doc = parse_json_graph(&to_json_graph(&g, Some(&positions))).unwrap();
        prop_assert_eq!(doc.graph.labels(), g.labels());
        prop_assert_eq!(doc.graph.edges(), g.edges());
        let back: Vec<Point> = doc.positions.into_iter().map(Option::unwrap).collect();
        prop_assert_eq!(back, positions);
    }

    #[test]
    fn hop_distances_form_a_metric(g in graph()) {
        let d = all_pairs_hop_distance(&g);
        let n = g.node_count();
        for u in 0..n {
            prop_assert_eq!(d.get(u, u), Some(0));
            for v in 0..n {
                prop_assert_eq!(d.raw(u, v), d.raw(v, u));
                prop_assert_eq!(d.get(u, v) == Some(1), g.has_edge(u, v));
                for w in 0..n {
                    if let (Some(a), Some(b)) = (d.get(u, w), d.get(w, v)) {
                        prop_assert!(d.get(u, v).is_some_and(|x| x <= a + b));
                    }
                }
            }
        }
    }
}
