use serde::{Deserialize, Serialize};

use super::{GCounter, JoinSemilattice, LatticeError};
use crate::replica::ReplicaId;

/// Counter supporting decrements, built as the product of two grow-only
/// counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PNCounter {
    positive: GCounter,
    negative: GCounter,
}

impl PNCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(positive: GCounter, negative: GCounter) -> Self {
        PNCounter { positive, negative }
    }

    pub fn positive(&self) -> &GCounter {
        &self.positive
    }

    pub fn negative(&self) -> &GCounter {
        &self.negative
    }

    pub fn increment(&self, replica: ReplicaId, amount: u64) -> Result<Self, LatticeError> {
        Ok(PNCounter {
            positive: self.positive.increment(replica, amount)?,
            negative: self.negative.clone(),
        })
    }

    pub fn decrement(&self, replica: ReplicaId, amount: u64) -> Result<Self, LatticeError> {
        Ok(PNCounter {
            positive: self.positive.clone(),
            negative: self.negative.increment(replica, amount)?,
        })
    }

    pub fn value(&self) -> i128 {
        // Each half is a sum of u64s over a bounded replica set, well inside i128.
        self.positive.value() as i128 - self.negative.value() as i128
    }
}

impl JoinSemilattice for PNCounter {
    fn bottom() -> Self {
        PNCounter::new()
    }

    fn join(&self, other: &Self) -> Self {
        PNCounter {
            positive: self.positive.join(&other.positive),
            negative: self.negative.join(&other.negative),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.positive.leq(&other.positive) && self.negative.leq(&other.negative)
    }
}
