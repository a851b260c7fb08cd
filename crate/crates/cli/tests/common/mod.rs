//! Brute-force count of delivery interleavings, one replica at a time.

#![allow(dead_code)]

use std::collections::BTreeSet;

use edgeflow_cli::fuzz::Duplicate;
use edgeflow_core::ReplicaId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    Own(usize),
    Receive(usize),
}

fn permutations(pool: &mut Vec<Event>, prefix: &mut Vec<Event>, out: &mut BTreeSet<Vec<Event>>) {
    if pool.is_empty() {
        out.insert(prefix.clone());
        return;
    }
    for k in 0..pool.len() {
        let e = pool.remove(k);
        prefix.push(e);
        permutations(pool, prefix, out);
        prefix.pop();
        pool.insert(k, e);
    }
}

/// Histories of one replica: its own mutations in script order, every copy
/// of every other broadcast received exactly once, and no broadcast received
/// before the mutation that produced it.
pub fn histories(writers: &[ReplicaId], q: ReplicaId, dup: Option<Duplicate>) -> usize {
    let mut pool = Vec::new();
    for (i, writer) in writers.iter().enumerate() {
        if *writer == q {
            pool.push(Event::Own(i));
        } else {
            pool.push(Event::Receive(i));
            if dup == Some(Duplicate { message: i, to: q }) {
                pool.push(Event::Receive(i));
            }
        }
    }
    let mut all = BTreeSet::new();
    permutations(&mut pool, &mut Vec::new(), &mut all);
    all.into_iter()
        .filter(|h| {
            let own: Vec<usize> = h
                .iter()
                .filter_map(|e| match e {
                    Event::Own(j) => Some(*j),
                    _ => None,
                })
                .collect();
            if own.windows(2).any(|w| w[0] > w[1]) {
                return false;
            }
            h.iter().enumerate().all(|(p, e)| match e {
                Event::Receive(i) => h[p..].iter().all(|later| match later {
                    Event::Own(j) => j > i,
                    _ => true,
                }),
                Event::Own(_) => true,
            })
        })
        .count()
}

/// Interleavings of a script whose `i`-th mutation runs at `writers[i]`.
pub fn expected(writers: &[ReplicaId], replicas: usize, dup: Option<Duplicate>) -> u64 {
    (0..replicas as u32)
        .map(|q| histories(writers, ReplicaId(q), dup) as u64)
        .product()
}
