use cim_core::graph::{
    brute_force_ground, cut_value, delay_line_topology, graph_to_ising, ising_energy, local_improvement, CouplingPhase,
    DelayLine, DelaySpec, Edge, SpinConfig, WeightedGraph,
};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let m = pairs.len();
        (
            Just(n),
            Just(pairs),
            proptest::collection::vec(prop_oneof![Just(0i32), -3i32..=3], m),
        )
            .prop_map(|(n, pairs, ws)| {
                let edges = pairs
                    .into_iter()
                    .zip(ws)
                    .filter(|&(_, w)| w != 0)
                    .map(|((u, v), w)| Edge { u, v, w: w as f64 })
                    .collect();
                WeightedGraph::new(n, edges).unwrap()
            })
    })
}

fn spins(n: usize) -> impl Strategy<Value = SpinConfig> {
    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n).prop_map(|v| SpinConfig::new(v).unwrap())
}

fn total_weight(g: &WeightedGraph) -> f64 {
    g.edges().iter().map(|e| e.w).sum()
}

proptest! {
    #[test]
    fn energy_is_invariant_under_global_flip((g, s) in graph_strategy(12).prop_flat_map(|g| { let n = g.n(); (Just(g), spins(n)) })) {
        let p = graph_to_ising(&g);
        prop_assert_eq!(ising_energy(&p, &s).unwrap(), ising_energy(&p, &s.complement()).unwrap());
    }

    #[test]
    fn energy_and_cut_are_affinely_related((g, s) in graph_strategy(12).prop_flat_map(|g| { let n = g.n(); (Just(g), spins(n)) })) {
        let e = ising_energy(&graph_to_ising(&g), &s).unwrap();
        let cut = cut_value(&g, &s).unwrap();
        prop_assert!((e - (total_weight(&g) - 2.0 * cut)).abs() < 1e-9);
    }

    #[test]
    fn ground_set_is_closed_under_complement(g in graph_strategy(10)) {
        let gs = brute_force_ground(&graph_to_ising(&g)).unwrap();
        for s in &gs.configs {
            prop_assert!(gs.contains(&s.complement()));
        }
    }

    #[test]
    fn local_improvement_never_raises_energy((g, s) in graph_strategy(12).prop_flat_map(|g| { let n = g.n(); (Just(g), spins(n)) })) {
        let p = graph_to_ising(&g);
        let better = local_improvement(&p, &s).unwrap();
        prop_assert!(ising_energy(&p, &better).unwrap() <= ising_energy(&p, &s).unwrap() + 1e-12);
        let again = local_improvement(&p, &better).unwrap();
        prop_assert_eq!(again, better);
    }

    #[test]
    fn delay_topology_is_symmetric(
        n in 3usize..12,
        raw in proptest::collection::vec((any::<bool>(), 0.0f64..2.0, any::<bool>()), 1..6),
    ) {
        let lines: Vec<DelayLine> = raw
            .iter()
            .take(n - 1)
            .enumerate()
            .map(|(k, &(pi, amplitude, enabled))| DelayLine {
                delay: k + 1,
                phase: if pi { CouplingPhase::OutOfPhase } else { CouplingPhase::InPhase },
                amplitude,
                enabled,
            })
            .collect();
        let p = delay_line_topology(&DelaySpec::new(n, lines).unwrap());
        for i in 0..n {
            prop_assert_eq!(p.coupling(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(p.coupling(i, j), p.coupling(j, i));
            }
        }
    }
}

/// Every spin configuration, against an independent dense-sum evaluation.
#[test]
fn exhaustive_energy_cut_identity_small_graphs() {
    let g = WeightedGraph::new(
        6,
        vec![
            Edge { u: 0, v: 1, w: 1.0 },
            Edge { u: 1, v: 2, w: -2.0 },
            Edge { u: 2, v: 3, w: 1.5 },
            Edge { u: 3, v: 4, w: 1.0 },
            Edge { u: 4, v: 5, w: 1.0 },
            Edge { u: 5, v: 0, w: 3.0 },
            Edge { u: 0, v: 3, w: -1.0 },
        ],
    )
    .unwrap();
    let dense = graph_to_ising(&g).to_dense();
    for idx in 0..64u64 {
        let s = SpinConfig::from_index(idx, 6);
        let sv = s.as_slice();
        let mut e = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                e -= dense[i][j] * f64::from(sv[i]) * f64::from(sv[j]);
            }
        }
        let cut: f64 = g.edges().iter().filter(|ed| sv[ed.u] != sv[ed.v]).map(|ed| ed.w).sum();
        assert_eq!(ising_energy(&graph_to_ising(&g), &s).unwrap(), e);
        assert_eq!(cut_value(&g, &s).unwrap(), cut);
        assert!((e - (total_weight(&g) - 2.0 * cut)).abs() < 1e-12);
    }
}
