//! Seeded fixtures shared by the benchmarks in `benches/`.

use edgeflow_core::sim::{NetworkModel, ScriptedUpdate, SimConfig};
use edgeflow_core::{
    Element, FnRegistry, GraphSpec, LatticeKind, Mutation, NodeSpec, ORSet, Op, ReplicaId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A set built by `ops` random adds and removes spread over `replicas`
/// writers, with `universe` distinct elements.
pub fn orset(seed: u64, ops: usize, replicas: u32, universe: i64) -> ORSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ORSet::new();
    for _ in 0..ops {
        let e = Element::Int(rng.gen_range(0..universe));
        if rng.gen_bool(0.8) {
            s = s
                .add(ReplicaId(rng.gen_range(0..replicas)), e)
                .expect("base set");
        } else {
            s = s.remove(&e);
        }
    }
    s
}

/// Readings feeding a filter, a map over it and a union with a second input.
pub fn pipeline_spec() -> GraphSpec {
    let registry = FnRegistry::builtin();
    let mut spec = GraphSpec::new();
    let nodes = [
        ("a", NodeSpec::input(LatticeKind::ORSet)),
        ("b", NodeSpec::input(LatticeKind::ORSet)),
        ("hot", NodeSpec::derived(Op::Filter("gt:50".into()), &["a"])),
        (
            "scaled",
            NodeSpec::derived(Op::Map("scale:2".into()), &["hot"]),
        ),
        ("either", NodeSpec::derived(Op::Union, &["scaled", "b"])),
        ("count", NodeSpec::derived(Op::FoldCount, &["either"])),
    ];
    for (name, node) in nodes {
        spec.declare(name.into(), node, &registry)
            .expect("valid pipeline");
    }
    spec
}

/// A lossy gossip run over `nodes` nodes with `updates` random adds.
pub fn gossip_config(nodes: usize, updates: usize, seed: u64) -> SimConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = SimConfig::new(nodes, pipeline_spec());
    config.fanout = 2;
    config.seed = seed;
    config.network = NetworkModel {
        drop_prob: 0.3,
        dup_prob: 0.1,
        max_delay_rounds: 2,
        partitions: Vec::new(),
    };
    config.script = (0..updates)
        .map(|i| ScriptedUpdate {
            round: (i % 5) as u64,
            node: ReplicaId(rng.gen_range(0..nodes as u32)),
            var: if rng.gen_bool(0.5) { "a" } else { "b" }.into(),
            mutation: Mutation::Add(Element::Int(rng.gen_range(0..100))),
        })
        .collect();
    config
}
