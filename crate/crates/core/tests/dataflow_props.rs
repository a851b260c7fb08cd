//! Operators computed on merged inputs agree with merged operator outputs.

use std::collections::BTreeMap;

use edgeflow_core::dataflow::ops;
use edgeflow_core::testkit;
use edgeflow_core::{
    DataflowGraph, DotTag, Element, FnRegistry, LatticeKind, Mutation, NodeSpec, ORSet, Op,
    ReplicaId, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUNCTIONS: &[&str] = &[
    "identity",
    "scale:10",
    "offset:1",
    "negate",
    "tag:t",
    "first",
    "pair-with:0",
];
const PREDICATES: &[&str] = &[
    "always",
    "never",
    "gt:2",
    "le:1.5",
    "string",
    "not:numeric",
    "eq:\"x\"",
];

fn sets(seed: u64, n: usize) -> Vec<ORSet> {
    testkit::orsets(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Join of two derived sets, decided entry by entry from the namespaced
/// dots: an entry survives unless the other side has seen its tag and
/// dropped it.
fn tag_level_join(x: &ORSet, y: &ORSet) -> BTreeMap<DotTag, Element> {
    let mut out = BTreeMap::new();
    for (mine, theirs) in [(x, y), (y, x)] {
        for (tag, e) in mine.entries() {
            if theirs.entries().contains_key(tag) || !theirs.context().contains(tag) {
                out.insert(tag.clone(), e.clone());
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn map_distributes_over_join(seed in any::<u64>(), f in prop::sample::select(FUNCTIONS)) {
        let f = FnRegistry::builtin().resolve_fn(f).unwrap();
        let s = sets(seed, 2);
        let whole = ops::map(&s[0].join(&s[1]).unwrap(), &f);
        let parts = ops::map(&s[0], &f).join(&ops::map(&s[1], &f)).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn filter_distributes_over_join(seed in any::<u64>(), p in prop::sample::select(PREDICATES)) {
        let p = FnRegistry::builtin().resolve_predicate(p).unwrap();
        let s = sets(seed, 2);
        let whole = ops::filter(&s[0].join(&s[1]).unwrap(), &p);
        let parts = ops::filter(&s[0], &p).join(&ops::filter(&s[1], &p)).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn union_is_merge_coherent(seed in any::<u64>()) {
        let s = sets(seed, 4);
        let (a, a2, b, b2) = (&s[0], &s[1], &s[2], &s[3]);
        let whole = ops::union(&a.join(a2).unwrap(), &b.join(b2).unwrap());
        let x = ops::union(a, b);
        let y = ops::union(a2, b2);
        prop_assert_eq!(whole.entries(), &tag_level_join(&x, &y));
        prop_assert_eq!(&whole, &x.join(&y).unwrap());
        prop_assert!(whole.is_well_formed());
    }

    #[test]
    fn product_is_merge_coherent(seed in any::<u64>(), flip in any::<bool>()) {
        let s = sets(seed, 3);
        let (a, a2, b) = (&s[0], &s[1], &s[2]);
        let merged = a.join(a2).unwrap();
        let (whole, x, y) = if flip {
            (ops::product(b, &merged), ops::product(b, a), ops::product(b, a2))
        } else {
            (ops::product(&merged, b), ops::product(a, b), ops::product(a2, b))
        };
        prop_assert_eq!(whole.entries(), &tag_level_join(&x, &y));
        prop_assert_eq!(&whole, &x.join(&y).unwrap());
        prop_assert!(whole.is_well_formed());
    }

    #[test]
    fn intersection_is_merge_coherent(seed in any::<u64>()) {
        let s = sets(seed, 3);
        let (a, a2, b) = (&s[0], &s[1], &s[2]);
        let whole = ops::intersection(&a.join(a2).unwrap(), b);
        let parts = ops::intersection(a, b).join(&ops::intersection(a2, b)).unwrap();
        prop_assert_eq!(whole, parts);
    }

    #[test]
    fn intersection_elements_are_set_intersection(seed in any::<u64>()) {
        let s = sets(seed, 2);
        let expected: Vec<Element> = s[0].elements().intersection(&s[1].elements()).cloned().collect();
        let got: Vec<Element> = ops::intersection(&s[0], &s[1]).elements().into_iter().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn output_tags_trace_back_to_live_inputs(seed in any::<u64>()) {
        let s = sets(seed, 2);
        for out in [ops::union(&s[0], &s[1]), ops::product(&s[0], &s[1])] {
            for tag in out.entries().keys() {
                for dot in tag.events() {
                    let live = s.iter().any(|x| x.entries().contains_key(&DotTag::Event(dot)));
                    prop_assert!(live, "{tag} has no live source");
                }
            }
        }
    }
}

fn graph() -> DataflowGraph {
    let mut g = DataflowGraph::new();
    g.declare("a", NodeSpec::input(LatticeKind::ORSet)).unwrap();
    g.declare("b", NodeSpec::input(LatticeKind::ORSet)).unwrap();
    g.declare("hot", NodeSpec::derived(Op::Filter("gt:2".into()), &["a"]))
        .unwrap();
    g.declare(
        "scaled",
        NodeSpec::derived(Op::Map("scale:10".into()), &["hot"]),
    )
    .unwrap();
    g.declare("either", NodeSpec::derived(Op::Union, &["scaled", "b"]))
        .unwrap();
    g.declare("both", NodeSpec::derived(Op::Intersection, &["a", "b"]))
        .unwrap();
    g.declare("pairs", NodeSpec::derived(Op::Product, &["hot", "b"]))
        .unwrap();
    g.declare("count", NodeSpec::derived(Op::FoldCount, &["either"]))
        .unwrap();
    g
}

fn random_updates(g: &mut DataflowGraph, rng: &mut ChaCha8Rng, replica: ReplicaId, n: usize) {
    for _ in 0..n {
        // Each input gets its own writer id so dots never coincide across inputs.
        let (var, writer): (VarId, ReplicaId) = if rng.gen_bool(0.5) {
            ("a".into(), ReplicaId(replica.0 * 2))
        } else {
            ("b".into(), ReplicaId(replica.0 * 2 + 1))
        };
        let element = Element::Int(rng.gen_range(0..6));
        let mutation = if rng.gen_bool(0.7) {
            Mutation::Add(element)
        } else {
            Mutation::Remove(element)
        };
        g.update(&var, writer, &mutation).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn replicas_with_equal_inputs_have_equal_views(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut left = graph();
        let mut right = graph();
        random_updates(&mut left, &mut rng, ReplicaId(0), 6);
        random_updates(&mut right, &mut rng, ReplicaId(1), 6);
        let (l, r) = (left.input_store(), right.input_store());
        for (id, v) in &r {
            left.merge_var(id, v).unwrap();
        }
        for (id, v) in &l {
            right.merge_var(id, v).unwrap();
        }
        prop_assert_eq!(left.store(), right.store());

        // The incrementally maintained store equals a fresh recomputation.
        let mut fresh = DataflowGraph::from_spec(left.spec(), FnRegistry::builtin()).unwrap();
        for (id, v) in left.input_store() {
            fresh.merge_var(&id, &v).unwrap();
        }
        prop_assert_eq!(fresh.store(), left.store());

        let before = left.store().clone();
        left.propagate().unwrap();
        prop_assert_eq!(left.store(), &before);
    }

    #[test]
    fn removing_a_source_removes_its_outputs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = graph();
        random_updates(&mut g, &mut rng, ReplicaId(0), 8);
        let a = g.read(&"a".into()).unwrap().as_orset().unwrap().clone();
        let Some(victim) = a.elements().into_iter().next() else { return Ok(()); };
        let dropped: Vec<_> = a.entries().iter().filter(|(_, e)| **e == victim).map(|(t, _)| t.clone()).collect();
        g.update(&"a".into(), ReplicaId(0), &Mutation::Remove(victim)).unwrap();
        for var in ["hot", "scaled", "either", "both", "pairs"] {
            let out = g.read(&var.into()).unwrap().as_orset().unwrap();
            for tag in out.entries().keys() {
                for dot in tag.events() {
                    prop_assert!(!dropped.contains(&DotTag::Event(dot)), "{var} kept {tag}");
                }
            }
        }
    }
}
