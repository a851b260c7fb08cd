//! Seeded generators of realistic CRDT states, shared by the law suites,
//! benchmarks and tests.
//!
//! Observed-remove sets are only meaningful when their dots come from one
//! consistent history (a dot names exactly one add), so set states are drawn
//! as snapshots of a simulated multi-replica history rather than assembled
//! from independent random parts.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::element::Element;
use crate::lattice::{
    GCounter, GSet, JoinSemilattice, LatticeKind, LatticeValue, LwwRegister, ORSet, PNCounter,
    Stamp,
};
use crate::replica::ReplicaId;

/// Replica ids used by the generators.
pub const REPLICAS: u32 = 4;

pub fn replica<R: Rng + ?Sized>(rng: &mut R) -> ReplicaId {
    ReplicaId(rng.gen_range(0..REPLICAS))
}

/// A small element universe so that collisions between replicas are common.
pub fn element<R: Rng + ?Sized>(rng: &mut R) -> Element {
    match rng.gen_range(0..10) {
        0..=3 => Element::Int(rng.gen_range(-3..6)),
        4..=5 => Element::Float(f64::from(rng.gen_range(0..20)) * 0.5),
        6..=8 => Element::Str(["x", "y", "z"][rng.gen_range(0..3)].to_owned()),
        _ => Element::pair(Element::Str("t".into()), Element::Int(rng.gen_range(0..3))),
    }
}

pub fn gcounter<R: Rng + ?Sized>(rng: &mut R) -> GCounter {
    let mut out = Vec::new();
    for r in 0..REPLICAS {
        if rng.gen_bool(0.6) {
            out.push((ReplicaId(r), rng.gen_range(0..6)));
        }
    }
    out.into_iter().collect()
}

pub fn pncounter<R: Rng + ?Sized>(rng: &mut R) -> PNCounter {
    PNCounter::from_parts(gcounter(rng), gcounter(rng))
}

pub fn gset<R: Rng + ?Sized>(rng: &mut R) -> GSet {
    let n = rng.gen_range(0..5);
    (0..n).map(|_| element(rng)).collect()
}

/// Registers written with honest stamps: the stamp determines the value.
pub fn lww<R: Rng + ?Sized>(rng: &mut R) -> LwwRegister {
    if rng.gen_bool(0.15) {
        return LwwRegister::bottom();
    }
    let stamp = Stamp {
        counter: rng.gen_range(1..5),
        replica: replica(rng),
    };
    let value = Element::Int((stamp.counter * 10 + u64::from(stamp.replica.0)) as i64);
    LwwRegister::with_stamp(stamp, value)
}

/// Runs a random history of `ops` adds, removes and merges across
/// [`REPLICAS`] replicas and returns every intermediate replica state.
pub fn orset_history<R: Rng + ?Sized>(rng: &mut R, ops: usize) -> Vec<ORSet> {
    let mut replicas = vec![ORSet::new(); REPLICAS as usize];
    let mut snapshots = vec![ORSet::new()];
    for _ in 0..ops {
        let i = rng.gen_range(0..replicas.len());
        let next = match rng.gen_range(0..8) {
            0..=3 => replicas[i]
                .add(ReplicaId(i as u32), element(rng))
                .expect("input sets allocate dots"),
            4..=5 => {
                let live: Vec<Element> = replicas[i].elements().into_iter().collect();
                match live.choose(rng) {
                    Some(e) => replicas[i].remove(e),
                    None => replicas[i].clone(),
                }
            }
            _ => {
                let j = rng.gen_range(0..replicas.len());
                replicas[i]
                    .join(&replicas[j])
                    .expect("input sets share a shape")
            }
        };
        replicas[i] = next.clone();
        snapshots.push(next);
    }
    snapshots
}

/// Picks `n` states from one shared history.
pub fn orsets<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<ORSet> {
    let ops = rng.gen_range(0..24);
    let history = orset_history(rng, ops);
    (0..n)
        .map(|_| history.choose(rng).expect("history is never empty").clone())
        .collect()
}

pub fn value<R: Rng + ?Sized>(rng: &mut R, kind: LatticeKind) -> LatticeValue {
    values(rng, kind, 1).pop().expect("one value requested")
}

/// `n` values of one kind that may legitimately meet in a join.
pub fn values<R: Rng + ?Sized>(rng: &mut R, kind: LatticeKind, n: usize) -> Vec<LatticeValue> {
    match kind {
        LatticeKind::GCounter => (0..n).map(|_| gcounter(rng).into()).collect(),
        LatticeKind::PNCounter => (0..n).map(|_| pncounter(rng).into()).collect(),
        LatticeKind::GSet => (0..n).map(|_| gset(rng).into()).collect(),
        LatticeKind::ORSet => orsets(rng, n).into_iter().map(Into::into).collect(),
        LatticeKind::LwwRegister => (0..n).map(|_| lww(rng).into()).collect(),
    }
}
