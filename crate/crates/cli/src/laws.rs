//! Randomized law checks for the lattice types and the set operators.

use std::collections::BTreeMap;
use std::fmt;

use edgeflow_core::dataflow::ops;
use edgeflow_core::testkit;
use edgeflow_core::{DotTag, Element, FnRegistry, LatticeKind, LatticeValue, ORSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const FUNCTIONS: &[&str] = &[
    "identity",
    "scale:10",
    "offset:1",
    "negate",
    "tag:t",
    "first",
    "pair-with:0",
];
pub const PREDICATES: &[&str] = &[
    "always",
    "never",
    "gt:2",
    "le:1.5",
    "string",
    "not:numeric",
    "eq:\"x\"",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawResult {
    pub law: String,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl LawResult {
    fn new(law: impl Into<String>) -> Self {
        LawResult {
            law: law.into(),
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: Result<bool, String>, describe: impl FnOnce() -> String) {
        self.cases += 1;
        let failure = match ok {
            Ok(true) => return,
            Ok(false) => describe(),
            Err(e) => format!("{}: {e}", describe()),
        };
        self.failures += 1;
        self.first_failure.get_or_insert(failure);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for LawResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({} cases", self.law, self.cases)?;
        if self.failures > 0 {
            write!(f, ", {} failures", self.failures)?;
        }
        f.write_str(")")?;
        if let Some(first) = &self.first_failure {
            write!(f, " first: {first}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawsReport {
    pub iterations: u64,
    pub seed: u64,
    pub results: Vec<LawResult>,
}

impl LawsReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(LawResult::passed)
    }

    pub fn get(&self, law: &str) -> Option<&LawResult> {
        self.results.iter().find(|r| r.law == law)
    }
}

fn join(a: &LatticeValue, b: &LatticeValue) -> Result<LatticeValue, String> {
    a.join(b).map_err(|e| e.to_string())
}

fn show(values: &[&LatticeValue]) -> String {
    values
        .iter()
        .map(|v| v.canonical_string())
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Idempotence, commutativity, associativity and bottom identity for one
/// lattice kind, each over `iterations` random triples.
pub fn lattice_laws(kind: LatticeKind, iterations: u64, seed: u64) -> Vec<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = kind.name();
    let mut idem = LawResult::new(format!("{name}.idempotence"));
    let mut comm = LawResult::new(format!("{name}.commutativity"));
    let mut assoc = LawResult::new(format!("{name}.associativity"));
    let mut ident = LawResult::new(format!("{name}.bottom-identity"));
    let bottom = LatticeValue::bottom(kind);
    for _ in 0..iterations {
        let v = testkit::values(&mut rng, kind, 3);
        let (a, b, c) = (&v[0], &v[1], &v[2]);
        idem.check(join(a, a).map(|x| x == *a), || show(&[a]));
        comm.check(join(a, b).and_then(|ab| Ok(ab == join(b, a)?)), || {
            show(&[a, b])
        });
        assoc.check(
            join(a, b)
                .and_then(|ab| join(&ab, c))
                .and_then(|left| Ok(left == join(a, &join(b, c)?)?)),
            || show(&[a, b, c]),
        );
        ident.check(
            join(a, &bottom).and_then(|x| Ok(x == *a && join(&bottom, a)? == *a)),
            || show(&[a]),
        );
    }
    vec![idem, comm, assoc, ident]
}

/// Join of two derived sets decided entry by entry from the namespaced dots:
/// an entry survives unless the other side has seen its tag and dropped it.
pub fn tag_level_join(x: &ORSet, y: &ORSet) -> BTreeMap<DotTag, Element> {
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

fn set_json(s: &ORSet) -> String {
    serde_json::to_string(s).unwrap_or_default()
}

fn coherent(whole: &ORSet, x: &ORSet, y: &ORSet) -> Result<bool, String> {
    let joined = x.join(y).map_err(|e| e.to_string())?;
    Ok(*whole.entries() == tag_level_join(x, y) && *whole == joined && whole.is_well_formed())
}

/// Map and filter homomorphism and union/product merge coherence, each over
/// `iterations` random input pairs.
pub fn dataflow_laws(iterations: u64, seed: u64) -> Vec<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let registry = FnRegistry::builtin();
    let functions: Vec<_> = FUNCTIONS
        .iter()
        .map(|f| registry.resolve_fn(f).expect("builtin function"))
        .collect();
    let predicates: Vec<_> = PREDICATES
        .iter()
        .map(|p| registry.resolve_predicate(p).expect("builtin predicate"))
        .collect();
    let mut map = LawResult::new("dataflow.map-homomorphism");
    let mut filter = LawResult::new("dataflow.filter-homomorphism");
    let mut union = LawResult::new("dataflow.union-coherence");
    let mut product = LawResult::new("dataflow.product-coherence");
    let err = |e: edgeflow_core::LatticeError| e.to_string();
    for i in 0..iterations as usize {
        let s = testkit::orsets(&mut rng, 4);
        let (a, a2, b, b2) = (&s[0], &s[1], &s[2], &s[3]);
        let describe = || format!("{} | {}", set_json(a), set_json(a2));
        let merged = match a.join(a2) {
            Ok(m) => m,
            Err(e) => {
                for law in [&mut map, &mut filter, &mut union, &mut product] {
                    law.check(Err(e.to_string()), describe);
                }
                continue;
            }
        };

        let f = &functions[i % functions.len()];
        map.check(
            ops::map(a, f)
                .join(&ops::map(a2, f))
                .map_err(err)
                .map(|parts| parts == ops::map(&merged, f)),
            || format!("{} with {}", describe(), FUNCTIONS[i % FUNCTIONS.len()]),
        );
        let p = &predicates[i % predicates.len()];
        filter.check(
            ops::filter(a, p)
                .join(&ops::filter(a2, p))
                .map_err(err)
                .map(|parts| parts == ops::filter(&merged, p)),
            || format!("{} with {}", describe(), PREDICATES[i % PREDICATES.len()]),
        );
        union.check(
            b.join(b2).map_err(err).and_then(|mb| {
                coherent(
                    &ops::union(&merged, &mb),
                    &ops::union(a, b),
                    &ops::union(a2, b2),
                )
            }),
            describe,
        );
        let (whole, x, y) = if i % 2 == 0 {
            (
                ops::product(&merged, b),
                ops::product(a, b),
                ops::product(a2, b),
            )
        } else {
            (
                ops::product(b, &merged),
                ops::product(b, a),
                ops::product(b, a2),
            )
        };
        product.check(coherent(&whole, &x, &y), describe);
    }
    vec![map, filter, union, product]
}

/// Every suite, each law checked over `iterations` random cases.
pub fn run(iterations: u64, seed: u64) -> LawsReport {
    let mut results = Vec::new();
    for (i, kind) in LatticeKind::ALL.iter().enumerate() {
        results.extend(lattice_laws(*kind, iterations, seed.wrapping_add(i as u64)));
    }
    results.extend(dataflow_laws(
        iterations,
        seed.wrapping_add(LatticeKind::ALL.len() as u64),
    ));
    LawsReport {
        iterations,
        seed,
        results,
    }
}
