//! Event identity and causal summaries.
//!
//! A [`Dot`] names one mutation. A [`VersionVector`] records, per replica, the
//! longest gap-free prefix of that replica's dots. A [`CausalContext`] is a
//! version vector plus a cloud of dots that arrived out of order; it is kept
//! normalized so that two contexts covering the same dots are structurally
//! equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::replica::ReplicaId;
use crate::serde_util::sorted_pairs;

/// A unique event identifier: the `seq`-th event produced by `replica`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dot {
    pub replica: ReplicaId,
    pub seq: u64,
}

impl Dot {
    /// # Panics
    ///
    /// Panics if `seq` is zero; sequences start at 1.
    pub fn new(replica: impl Into<ReplicaId>, seq: u64) -> Self {
        assert!(seq >= 1, "dot sequence numbers start at 1");
        Dot {
            replica: replica.into(),
            seq,
        }
    }
}

impl fmt::Display for Dot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.replica, self.seq)
    }
}

/// Result of comparing two version vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Causality {
    Equal,
    Before,
    After,
    Concurrent,
}

/// Per-replica maximum contiguous sequence observed. Zero entries are never
/// stored, so the empty vector is the unique bottom.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VersionVector {
    #[serde(with = "sorted_pairs")]
    entries: BTreeMap<ReplicaId, u64>,
}

impl VersionVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, replica: ReplicaId) -> u64 {
        self.entries.get(&replica).copied().unwrap_or(0)
    }

    /// Sets the entry for `replica`; a zero removes it.
    pub fn set(&mut self, replica: ReplicaId, seq: u64) {
        if seq == 0 {
            self.entries.remove(&replica);
        } else {
            self.entries.insert(replica, seq);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ReplicaId, u64)> + '_ {
        self.entries.iter().map(|(r, n)| (*r, *n))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn covers(&self, dot: &Dot) -> bool {
        dot.seq <= self.get(dot.replica)
    }

    /// Pointwise maximum.
    pub fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (r, n) in other.iter() {
            if n > out.get(r) {
                out.entries.insert(r, n);
            }
        }
        out
    }

    pub fn compare(&self, other: &Self) -> Causality {
        let mut le = true;
        let mut ge = true;
        for r in self.entries.keys().chain(other.entries.keys()) {
            let (a, b) = (self.get(*r), other.get(*r));
            le &= a <= b;
            ge &= a >= b;
        }
        match (le, ge) {
            (true, true) => Causality::Equal,
            (true, false) => Causality::Before,
            (false, true) => Causality::After,
            (false, false) => Causality::Concurrent,
        }
    }

    /// Total number of dots covered.
    pub fn event_count(&self) -> u64 {
        self.entries.values().sum()
    }
}

impl FromIterator<(ReplicaId, u64)> for VersionVector {
    fn from_iter<I: IntoIterator<Item = (ReplicaId, u64)>>(iter: I) -> Self {
        let mut vv = VersionVector::new();
        for (r, n) in iter {
            vv.set(r, n);
        }
        vv
    }
}

/// Compares two version vectors in the causal partial order.
pub fn vv_compare(a: &VersionVector, b: &VersionVector) -> Causality {
    a.compare(b)
}

/// The set of all dots a state has observed.
///
/// Invariant: no cloud dot is covered by `compact`, and no cloud dot is the
/// immediate successor of its replica's compact entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CausalContext {
    compact: VersionVector,
    cloud: BTreeSet<Dot>,
}

impl CausalContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(compact: VersionVector, cloud: impl IntoIterator<Item = Dot>) -> Self {
        let mut cc = CausalContext {
            compact,
            cloud: cloud.into_iter().collect(),
        };
        cc.normalize();
        cc
    }

    pub fn compact(&self) -> &VersionVector {
        &self.compact
    }

    pub fn cloud(&self) -> &BTreeSet<Dot> {
        &self.cloud
    }

    pub fn is_empty(&self) -> bool {
        self.compact.is_empty() && self.cloud.is_empty()
    }

    pub fn contains(&self, dot: &Dot) -> bool {
        self.compact.covers(dot) || self.cloud.contains(dot)
    }

    /// Allocates the successor dot for `replica` and records it.
    pub fn next_dot(&self, replica: ReplicaId) -> (Dot, CausalContext) {
        let dot = Dot {
            replica,
            seq: self.compact.get(replica) + 1,
        };
        let mut next = self.clone();
        next.insert(dot);
        (dot, next)
    }

    pub fn insert(&mut self, dot: Dot) {
        if self.contains(&dot) {
            return;
        }
        self.cloud.insert(dot);
        self.normalize();
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut out = CausalContext {
            compact: self.compact.merge(&other.compact),
            cloud: self.cloud.union(&other.cloud).copied().collect(),
        };
        out.normalize();
        out
    }

    /// Number of distinct dots covered.
    pub fn event_count(&self) -> u64 {
        self.compact.event_count() + self.cloud.len() as u64
    }

    /// Every covered dot, in (replica, seq) order.
    pub fn dots(&self) -> Vec<Dot> {
        let mut out: Vec<Dot> = self
            .compact
            .iter()
            .flat_map(|(r, n)| (1..=n).map(move |seq| Dot { replica: r, seq }))
            .chain(self.cloud.iter().copied())
            .collect();
        out.sort();
        out
    }

    fn normalize(&mut self) {
        // Cloud dots are sorted by (replica, seq), so one pass absorbs whole
        // contiguous runs.
        let cloud = std::mem::take(&mut self.cloud);
        for dot in cloud {
            let top = self.compact.get(dot.replica);
            if dot.seq <= top {
                continue;
            }
            if dot.seq == top + 1 {
                self.compact.set(dot.replica, dot.seq);
            } else {
                self.cloud.insert(dot);
            }
        }
    }
}

impl fmt::Display for CausalContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (r, n) in self.compact.iter() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{r}:{n}")?;
        }
        for dot in &self.cloud {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "+{dot}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ReplicaId = ReplicaId(0);
    const B: ReplicaId = ReplicaId(1);

    fn vv(entries: &[(ReplicaId, u64)]) -> VersionVector {
        entries.iter().copied().collect()
    }

    fn cc(entries: &[(ReplicaId, u64)], cloud: &[(ReplicaId, u64)]) -> CausalContext {
        CausalContext::from_parts(vv(entries), cloud.iter().map(|(r, s)| Dot::new(*r, *s)))
    }

    #[test]
    fn compare_examples() {
        assert_eq!(
            vv_compare(&vv(&[(A, 1)]), &vv(&[(A, 2)])),
            Causality::Before
        );
        assert_eq!(
            vv_compare(&vv(&[(A, 1)]), &vv(&[(B, 1)])),
            Causality::Concurrent
        );
        assert_eq!(
            vv_compare(&vv(&[(A, 2), (B, 1)]), &vv(&[(A, 2), (B, 1)])),
            Causality::Equal
        );
        assert_eq!(vv_compare(&vv(&[(A, 2)]), &vv(&[])), Causality::After);
    }

    #[test]
    fn next_dot_examples() {
        let (dot, ctx) = CausalContext::new().next_dot(A);
        assert_eq!(dot, Dot::new(A, 1));
        assert_eq!(ctx, cc(&[(A, 1)], &[]));

        let (dot, ctx) = cc(&[(A, 2)], &[]).next_dot(A);
        assert_eq!(dot, Dot::new(A, 3));
        assert_eq!(ctx, cc(&[(A, 3)], &[]));

        let (dot, ctx) = cc(&[(A, 2)], &[]).next_dot(B);
        assert_eq!(dot, Dot::new(B, 1));
        assert_eq!(ctx, cc(&[(A, 2), (B, 1)], &[]));
    }

    #[test]
    fn contains_respects_gaps() {
        let ctx = cc(&[(A, 2)], &[]);
        assert!(ctx.contains(&Dot::new(A, 1)));
        assert!(!ctx.contains(&Dot::new(A, 3)));

        let gappy = cc(&[(A, 1)], &[(A, 3)]);
        assert!(gappy.contains(&Dot::new(A, 3)));
        assert!(!gappy.contains(&Dot::new(A, 2)));
        assert_eq!(gappy.cloud().len(), 1);
    }

    #[test]
    fn merge_examples() {
        let x = cc(&[(A, 2), (B, 1)], &[(A, 5)]);
        assert_eq!(x.merge(&x), x);
        assert_eq!(
            cc(&[(A, 2)], &[]).merge(&cc(&[], &[(A, 3)])),
            cc(&[(A, 3)], &[])
        );
        assert_eq!(
            cc(&[(A, 1)], &[]).merge(&cc(&[(B, 2)], &[])),
            cc(&[(A, 1), (B, 2)], &[])
        );
        assert!(cc(&[(A, 2)], &[])
            .merge(&cc(&[], &[(A, 3)]))
            .cloud()
            .is_empty());
    }

    #[test]
    fn normalization_absorbs_runs() {
        let ctx = cc(&[(A, 1)], &[(A, 2), (A, 3), (A, 5), (B, 1), (B, 3)]);
        assert_eq!(ctx.compact(), &vv(&[(A, 3), (B, 1)]));
        assert_eq!(
            ctx.cloud().iter().copied().collect::<Vec<_>>(),
            vec![Dot::new(A, 5), Dot::new(B, 3)]
        );
        assert_eq!(ctx.event_count(), 6);
    }

    #[test]
    #[should_panic]
    fn zero_sequence_is_rejected() {
        let _ = Dot::new(A, 0);
    }
}
