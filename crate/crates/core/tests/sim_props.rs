//! Simulator invariants over seeded runs.

use std::collections::BTreeMap;

use edgeflow_core::sim::{Partition, ScriptedUpdate, SimConfig, Simulation};
use edgeflow_core::{
    Element, FnRegistry, GraphSpec, LatticeKind, LatticeValue, Mutation, NodeSpec, Op, ReplicaId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec() -> GraphSpec {
    let reg = FnRegistry::builtin();
    let mut spec = GraphSpec::new();
    spec.declare("s".into(), NodeSpec::input(LatticeKind::ORSet), &reg)
        .unwrap();
    spec.declare("c".into(), NodeSpec::input(LatticeKind::PNCounter), &reg)
        .unwrap();
    spec.declare(
        "big".into(),
        NodeSpec::derived(Op::Filter("gt:5".into()), &["s"]),
        &reg,
    )
    .unwrap();
    spec
}

fn config(seed: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut config = SimConfig::new(5, spec());
    config.seed = seed;
    config.fanout = 2;
    config.network.drop_prob = 0.3;
    config.network.dup_prob = 0.1;
    config.network.max_delay_rounds = 2;
    config
        .network
        .partitions
        .push(Partition::new(2, 5, [ReplicaId(4)]));
    config.script = (0..12)
        .map(|_| {
            let node = ReplicaId(rng.gen_range(0..5));
            let round = rng.gen_range(0..6);
            if rng.gen_bool(0.6) {
                ScriptedUpdate {
                    round,
                    node,
                    var: "s".into(),
                    mutation: Mutation::Add(Element::Int(rng.gen_range(0..10))),
                }
            } else {
                ScriptedUpdate {
                    round,
                    node,
                    var: "c".into(),
                    mutation: Mutation::Increment(rng.gen_range(1..4)),
                }
            }
        })
        .collect();
    config
}

#[test]
fn identical_config_gives_identical_trace() {
    for seed in 0..10 {
        let mut a = Simulation::new(config(seed)).unwrap();
        let mut b = Simulation::new(config(seed)).unwrap();
        let ra = a.run(60).unwrap();
        let rb = b.run(60).unwrap();
        assert_eq!(ra.to_json(), rb.to_json());
        let ta: Vec<String> = ra.trace.iter().map(|r| r.to_json_line()).collect();
        let tb: Vec<String> = rb.trace.iter().map(|r| r.to_json_line()).collect();
        assert_eq!(ta, tb);
    }
}

#[test]
fn stores_only_grow() {
    for seed in 0..10 {
        let mut sim = Simulation::new(config(seed)).unwrap();
        let mut previous = sim.input_stores();
        for _ in 0..25 {
            sim.step().unwrap();
            let current = sim.input_stores();
            for (node, store) in &current {
                for (var, value) in store {
                    assert!(
                        previous[node][var].leq(value).unwrap(),
                        "seed {seed} {node} {var}"
                    );
                }
            }
            previous = current;
        }
    }
}

#[test]
fn replaying_the_delivered_log_changes_nothing() {
    for seed in 0..10 {
        let mut sim = Simulation::new(config(seed)).unwrap();
        sim.run(60).unwrap();
        let before = sim.input_stores();
        for envelope in sim.delivered_log().to_vec() {
            assert!(!sim.apply_envelope(&envelope).unwrap());
        }
        assert_eq!(sim.input_stores(), before);
    }
}

#[test]
fn converged_runs_reach_the_join_of_all_updates() {
    for seed in 0..20 {
        let config = config(seed);
        // Oracle: replay every update at its owner in script order on an
        // isolated replica, then join the owners' states.
        let mut owners: BTreeMap<ReplicaId, BTreeMap<&str, LatticeValue>> = BTreeMap::new();
        let mut script = config.script.clone();
        script.sort_by_key(|u| u.round);
        for u in &script {
            let store = owners.entry(u.node).or_insert_with(|| {
                BTreeMap::from([
                    ("s", LatticeValue::bottom(LatticeKind::ORSet)),
                    ("c", LatticeValue::bottom(LatticeKind::PNCounter)),
                ])
            });
            let slot = store.get_mut(u.var.as_str()).unwrap();
            *slot = slot.apply(u.node, &u.mutation).unwrap();
        }
        let mut expected = BTreeMap::from([
            ("s", LatticeValue::bottom(LatticeKind::ORSet)),
            ("c", LatticeValue::bottom(LatticeKind::PNCounter)),
        ]);
        for store in owners.values() {
            for (var, value) in store {
                let joined = expected[var].join(value).unwrap();
                expected.insert(var, joined);
            }
        }

        let mut sim = Simulation::new(config).unwrap();
        let report = sim.run(80).unwrap();
        assert!(report.converged, "seed {seed}");
        for node in sim.nodes() {
            for (var, value) in &expected {
                assert_eq!(
                    node.graph.read(&(*var).into()).unwrap(),
                    value,
                    "seed {seed}"
                );
            }
        }
    }
}
