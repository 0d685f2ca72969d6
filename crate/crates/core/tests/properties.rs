use patrolgame::allocation::{allocate_bipartite_side, allocate_complete, pairwise_balance};
use patrolgame::oracles::random_strategy;
use patrolgame::strategy::{
    capture_upper_bound, synthesize_bipartite, synthesize_complete, synthesize_star,
};
use patrolgame::{
    build_graph, capture_probability, hitting_time_probabilities, stationary_distribution,
    validate_attack_durations, AttackDurations, GraphSpec, GraphTopology,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy() -> impl Strategy<Value = GraphTopology> {
    prop_oneof![
        (2usize..=6).prop_map(|n| GraphTopology::complete(n).unwrap()),
        (1usize..=4, 1usize..=4)
            .prop_map(|(p, q)| GraphTopology::complete_bipartite(p, q).unwrap()),
        (2usize..=6).prop_map(|n| GraphTopology::star(n).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_and_bounded(g in graph_strategy(), seed in any::<u64>(), k in 1usize..=10) {
        let p = random_strategy(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = hitting_time_probabilities(&p, k).unwrap();
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                let mut prev = 0.0;
                for s in 1..=k {
                    let c = f.cumulative(i, j, s);
                    prop_assert!(c + 1e-12 >= prev);
                    prop_assert!(c <= 1.0 + 1e-9);
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn stationary_bound_holds(g in graph_strategy(), seed in any::<u64>(), t in prop::collection::vec(1u32..=8, 6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_strategy(&g, &mut rng);
        let tau = AttackDurations::new(t[..g.n().min(6)].iter().copied().chain(std::iter::repeat(3)).take(g.n()).collect()).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let mu = capture_probability(&p, &tau).unwrap().mu;
        let bound = capture_upper_bound(&pi, &tau).unwrap();
        prop_assert!(mu <= bound.stationary_bound + 1e-9);
        prop_assert!(bound.stationary_bound.min(1.0) <= bound.generic_bound + 1e-9);
        prop_assert!(mu <= bound.generic_bound + 1e-9);
    }

    #[test]
    fn bipartite_walk_alternates_sides(p in 1usize..=4, q in 1usize..=4, seed in any::<u64>(), k in 1usize..=8) {
        let g = GraphTopology::complete_bipartite(p, q).unwrap();
        let m = random_strategy(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let f = hitting_time_probabilities(&m, k).unwrap();
        let side = |v: usize| v < p;
        for s in 1..=k {
            for i in 0..p + q {
                for j in 0..p + q {
                    let same = side(i) == side(j);
                    if same == (s % 2 == 1) {
                        prop_assert!(f.get(s)[(i, j)].abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn complete_synthesis_equalizes(t in prop::collection::vec(1u32..=8, 2..=6)) {
        let tau = AttackDurations::new(t.clone()).unwrap();
        let r = synthesize_complete(&tau).unwrap();
        let cap = capture_probability(&r.p, &tau).unwrap();
        prop_assert!((cap.mu - r.mu).abs() < 1e-9);
        prop_assert!((r.mu - (1.0 - r.w)).abs() < 1e-9);
        // Every first-visit column is equalized at the game value.
        for (&pj, &tj) in r.pi.as_slice().iter().zip(&t) {
            let miss = (1.0f64 - pj).powi(tj as i32);
            prop_assert!((miss - r.w).abs() < 1e-9);
        }
    }

    #[test]
    fn complete_mu_monotone_in_tau(t in prop::collection::vec(1u32..=7, 2..=6), bump in 0usize..6) {
        let idx = bump % t.len();
        let base = synthesize_complete(&AttackDurations::new(t.clone()).unwrap()).unwrap().mu;
        let mut up = t.clone();
        up[idx] += 1;
        let more = synthesize_complete(&AttackDurations::new(up).unwrap()).unwrap().mu;
        prop_assert!(more + 1e-12 >= base);
    }

    #[test]
    fn bipartite_synthesis_matches_recursion(
        tp in prop::collection::vec(2u32..=8, 1..=4),
        tq in prop::collection::vec(2u32..=8, 1..=4),
    ) {
        let g = GraphTopology::complete_bipartite(tp.len(), tq.len()).unwrap();
        let r = synthesize_bipartite(&g, &tp, &tq).unwrap();
        let tau = AttackDurations::new(tp.iter().chain(&tq).copied().collect()).unwrap();
        let cap = capture_probability(&r.p, &tau).unwrap();
        prop_assert!((cap.mu - r.mu).abs() < 1e-9);
        // Odd durations give no more than the even duration below them.
        let floored: Vec<u32> = tp.iter().map(|&t| t - t % 2).collect();
        let even = synthesize_bipartite(&g, &floored, &tq).unwrap();
        prop_assert!((even.mu - r.mu).abs() < 1e-9);
    }

    #[test]
    fn star_synthesis_matches_recursion(t in prop::collection::vec(2u32..=8, 2..=6)) {
        let tau = AttackDurations::new(t).unwrap();
        let r = synthesize_star(&tau).unwrap();
        let cap = capture_probability(&r.p, &tau).unwrap();
        prop_assert!((cap.mu - r.mu).abs() < 1e-9);
        let g = GraphTopology::star(tau.len()).unwrap();
        prop_assert!(r.p.check_support(&g).is_ok());
    }

    #[test]
    fn complete_allocation_conserves_budget(n in 2usize..=7, extra in 1u64..40) {
        let n64 = n as u64;
        let b = n64 + 1 + extra % (n64 * n64 - n64 - 1);
        let r = allocate_complete(n, b).unwrap();
        prop_assert_eq!(r.tau.iter().map(|&t| u64::from(t)).sum::<u64>(), b);
        let (lo, hi) = (r.tau.iter().min().unwrap(), r.tau.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert!(r.w > (-2.0f64).exp());
    }

    #[test]
    fn side_allocation_conserves_budget(n in 1usize..=6, half in 0u64..30) {
        let b = 2 * n as u64 + 2 * (half % (n as u64 * n as u64 - n as u64).max(1));
        let r = allocate_bipartite_side(n, b).unwrap();
        prop_assert_eq!(r.tau.iter().map(|&t| u64::from(t)).sum::<u64>(), b);
        prop_assert!(r.tau.iter().all(|&t| t % 2 == 0 && t >= 2));
    }

    #[test]
    fn balancing_strictly_decreases_w(t in prop::collection::vec(1u32..=12, 2..=6)) {
        let trace = pairwise_balance(&t, 1).unwrap();
        for pair in trace.states.windows(2) {
            prop_assert!(pair[1].w < pair[0].w);
        }
        let last = &trace.last().tau;
        prop_assert_eq!(last.iter().sum::<u32>(), t.iter().sum::<u32>());
    }

    #[test]
    fn side_balancing_strictly_decreases_w(t in prop::collection::vec(1u32..=6, 2..=5)) {
        let even: Vec<u32> = t.iter().map(|x| 2 * x).collect();
        let trace = pairwise_balance(&even, 2).unwrap();
        for pair in trace.states.windows(2) {
            prop_assert!(pair[1].w < pair[0].w);
        }
    }

    #[test]
    fn build_graph_is_deterministic_and_connected(n in 2usize..=7, p in 1usize..=4, q in 1usize..=4) {
        for spec in [GraphSpec::complete(n), GraphSpec::bipartite(p, q), GraphSpec::star(n)] {
            let a = build_graph(&spec).unwrap();
            let b = build_graph(&spec).unwrap();
            prop_assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
            prop_assert!(a.is_strongly_connected());
        }
    }

    #[test]
    fn complete_graph_never_violates_condition1(t in prop::collection::vec(1u32..=9, 2..=7)) {
        let g = GraphTopology::complete(t.len()).unwrap();
        let report = validate_attack_durations(&g, &AttackDurations::new(t).unwrap()).unwrap();
        prop_assert!(report.condition1_violations.is_empty());
    }
}
