use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{JoinSemilattice, LatticeError};
use crate::replica::ReplicaId;
use crate::serde_util::sorted_pairs;

/// Grow-only counter: one monotone count per replica, joined by pointwise max.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GCounter {
    // Zero counts are never stored.
    #[serde(with = "sorted_pairs")]
    entries: BTreeMap<ReplicaId, u64>,
}

impl GCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, replica: ReplicaId) -> u64 {
        self.entries.get(&replica).copied().unwrap_or(0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (ReplicaId, u64)> + '_ {
        self.entries.iter().map(|(r, n)| (*r, *n))
    }

    pub fn increment(&self, replica: ReplicaId, amount: u64) -> Result<Self, LatticeError> {
        if amount == 0 {
            return Err(LatticeError::ZeroAmount);
        }
        let next = self
            .get(replica)
            .checked_add(amount)
            .ok_or(LatticeError::Overflow)?;
        let mut out = self.clone();
        out.entries.insert(replica, next);
        Ok(out)
    }

    pub fn value(&self) -> u128 {
        self.entries.values().map(|&n| u128::from(n)).sum()
    }
}

impl FromIterator<(ReplicaId, u64)> for GCounter {
    fn from_iter<I: IntoIterator<Item = (ReplicaId, u64)>>(iter: I) -> Self {
        GCounter {
            entries: iter.into_iter().filter(|(_, n)| *n > 0).collect(),
        }
    }
}

impl JoinSemilattice for GCounter {
    fn bottom() -> Self {
        GCounter::new()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (r, n) in other.entries() {
            let slot = out.entries.entry(r).or_insert(0);
            *slot = (*slot).max(n);
        }
        out
    }

    fn leq(&self, other: &Self) -> bool {
        self.entries().all(|(r, n)| n <= other.get(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ReplicaId = ReplicaId(0);
    const B: ReplicaId = ReplicaId(1);

    fn gc(entries: &[(ReplicaId, u64)]) -> GCounter {
        entries.iter().copied().collect()
    }

    #[test]
    fn increment_examples() {
        assert_eq!(GCounter::new().increment(A, 1).unwrap(), gc(&[(A, 1)]));
        assert_eq!(gc(&[(A, 1)]).increment(A, 2).unwrap(), gc(&[(A, 3)]));
        assert_eq!(
            gc(&[(A, 1)]).increment(B, 1).unwrap(),
            gc(&[(A, 1), (B, 1)])
        );
        assert_eq!(
            GCounter::new().increment(A, 0),
            Err(LatticeError::ZeroAmount)
        );
        assert_eq!(
            gc(&[(A, u64::MAX)]).increment(A, 1),
            Err(LatticeError::Overflow)
        );
    }

    #[test]
    fn join_is_pointwise_max() {
        assert_eq!(
            gc(&[(A, 2), (B, 1)]).join(&gc(&[(A, 1), (B, 3)])),
            gc(&[(A, 2), (B, 3)])
        );
    }

    #[test]
    fn value_and_order() {
        assert_eq!(gc(&[(A, 2), (B, 3)]).value(), 5);
        assert_eq!(GCounter::bottom().value(), 0);
        assert!(!gc(&[(A, 1)]).leq(&gc(&[(B, 2)])));
        assert!(!gc(&[(B, 2)]).leq(&gc(&[(A, 1)])));
        assert!(GCounter::bottom().leq(&gc(&[(B, 2)])));
    }
}
