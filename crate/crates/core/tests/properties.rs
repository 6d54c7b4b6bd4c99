mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmrank::aggregation::{rank_solutions, select_outcome, Algorithm, RankOptions, Ranking, SelectionRule};
use swarmrank::swarm::{EnergyVector, Mode, Swarm, SwarmConfig};
use swarmrank::{builtin, labels, scenario, Context, Network, NodeId, SchemaMode};

fn scenario_for(seed: u64, multi: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = if multi { SchemaMode::MultipleDomains } else { SchemaMode::SingleDomain };
    let shape = Shape {
        humans: 5,
        domains: 4,
        max_out: 3,
        ..Shape::small()
    };
    let mut sc = random_scenario(&mut rng, mode, shape);
    let sols = solutions(&sc.network, &sc.problem);
    let h0 = sc.network.humans()[0].clone();
    if normalized_votes(&sc.network, &h0, &sc.problem).is_empty() {
        sc.network.add_edge(&h0, labels::VOTED_ON, &sols[0], 1.0).unwrap();
    }
    sc
}

fn algorithms() -> [Algorithm; 3] {
    [
        Algorithm::DirectDemocracy,
        Algorithm::RepresentativeDemocracy,
        Algorithm::DynamicallyDistributed,
    ]
}

/// Copy of `g` with every votedOn weight of `h` multiplied by `k`.
fn scale_votes(g: &Network, h: &NodeId, k: f64) -> Network {
    let mut out = g.clone();
    for e in g.edges() {
        if &e.source == h && e.label == labels::VOTED_ON {
            out.set_weight(&e.source, &e.label, &e.target, e.weight * k).unwrap();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn rankings_sum_to_one(seed in any::<u64>(), multi in any::<bool>(), alg in 0usize..3) {
        let sc = scenario_for(seed, multi);
        let r = rank_solutions(&sc.network, &sc.problem, &algorithms()[alg], &RankOptions::default()).unwrap();
        let total: f64 = r.ranking.entries().iter().map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let w: Vec<f64> = r.ranking.entries().iter().map(|(_, w)| *w).collect();
        prop_assert!(w.windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn vote_scale_invariance(seed in any::<u64>(), multi in any::<bool>(), k in 0.01f64..100.0, who in 0usize..5) {
        let sc = scenario_for(seed, multi);
        let h = sc.network.humans()[who].clone();
        let scaled = scale_votes(&sc.network, &h, k);
        let sols = solutions(&sc.network, &sc.problem);
        for alg in algorithms() {
            let a = rank_solutions(&sc.network, &sc.problem, &alg, &RankOptions::default()).unwrap();
            let b = rank_solutions(&scaled, &sc.problem, &alg, &RankOptions::default()).unwrap();
            prop_assert!(max_abs_diff(&a.ranking.vector(&sols), &b.ranking.vector(&sols)) < 1e-10);
        }
    }

    #[test]
    fn silent_humans_do_not_change_dd(seed in any::<u64>(), multi in any::<bool>(), extra in 1usize..5) {
        let sc = scenario_for(seed, multi);
        let mut bigger = sc.network.clone();
        for _ in 0..extra {
            bigger.add_human();
        }
        let sols = solutions(&sc.network, &sc.problem);
        let a = rank_solutions(&sc.network, &sc.problem, &Algorithm::DirectDemocracy, &RankOptions::default()).unwrap();
        let b = rank_solutions(&bigger, &sc.problem, &Algorithm::DirectDemocracy, &RankOptions::default()).unwrap();
        prop_assert_eq!(a.ranking.vector(&sols), b.ranking.vector(&sols));
    }

    #[test]
    fn plurality_ignores_rescaling(ws in prop::collection::vec(0.0f64..10.0, 1..6), k in 0.001f64..1000.0) {
        prop_assume!(ws.iter().sum::<f64>() > 0.0);
        let ids: Vec<NodeId> = (0..ws.len()).map(|i| NodeId::new(format!("s{i}"))).collect();
        let a = Ranking::new(ids.iter().cloned().zip(ws.iter().copied())).unwrap();
        let b = Ranking::new(ids.iter().cloned().zip(ws.iter().map(|w| w * k))).unwrap();
        prop_assert_eq!(
            select_outcome(&a, SelectionRule::Plurality, |_| None).unwrap(),
            select_outcome(&b, SelectionRule::Plurality, |_| None).unwrap()
        );
    }

    #[test]
    fn energy_never_decreases(seed in any::<u64>(), multi in any::<bool>(), mc in any::<bool>()) {
        let sc = scenario_for(seed, multi);
        let grammar = builtin(if multi { "ddd" } else { "ddd_single" }).unwrap();
        let ctx = Context::for_problem(&sc.problem);
        let mut config = SwarmConfig::new(sc.network.humans(), solutions(&sc.network, &sc.problem)).with_decay(0.15);
        if mc {
            config = config.monte_carlo(seed, 200);
        }
        let swarm = Swarm::new(&sc.network, &grammar, &ctx, config).unwrap();
        let mut e = EnergyVector::new(&sc.network);
        let mut before: Vec<f64> = e.iter().map(|(_, v)| v).collect();
        for epoch in 0..4 {
            swarm.run_epoch(epoch, &mut e);
            let now: Vec<f64> = e.iter().map(|(_, v)| v).collect();
            prop_assert!(now.iter().zip(&before).all(|(a, b)| a >= b));
            before = now;
        }
    }

    #[test]
    fn scenario_json_round_trips(seed in any::<u64>(), multi in any::<bool>()) {
        let sc = scenario_for(seed, multi);
        let text = scenario::to_json_string(&sc.network);
        let loaded = scenario::from_json_str(&text).unwrap();
        prop_assert!(loaded.violations().is_empty());
        prop_assert_eq!(scenario::to_json_string(&loaded.network), text);
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), multi in any::<bool>()) {
        let sc = scenario_for(seed, multi);
        let opts = RankOptions {
            mode: Mode::MonteCarlo { seed, particles_per_source: 300 },
            max_epochs: 5,
            ..RankOptions::default()
        };
        let one = RankOptions { workers: Some(1), ..opts.clone() };
        let three = RankOptions { workers: Some(3), ..opts };
        let alg = Algorithm::DynamicallyDistributed;
        let a = rank_solutions(&sc.network, &sc.problem, &alg, &one).unwrap();
        let b = rank_solutions(&sc.network, &sc.problem, &alg, &three).unwrap();
        prop_assert_eq!(a.ranking, b.ranking);
    }
}
