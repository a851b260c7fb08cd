use std::fmt;

use serde::{Deserialize, Serialize};

use super::JoinSemilattice;
use crate::element::Element;
use crate::replica::ReplicaId;

/// Logical timestamp of a register write. Ordered by counter, then replica, so
/// a tie on the counter is won by the larger replica id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stamp {
    pub counter: u64,
    pub replica: ReplicaId,
}

impl fmt::Display for Stamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.counter, self.replica)
    }
}

/// Last-writer-wins register. The empty register is bottom.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LwwRegister {
    entry: Option<(Stamp, Element)>,
}

impl LwwRegister {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stamp(stamp: Stamp, value: Element) -> Self {
        LwwRegister {
            entry: Some((stamp, value)),
        }
    }

    /// Writes `value` with a stamp one past the largest counter seen.
    pub fn write(&self, replica: ReplicaId, value: Element) -> Self {
        let counter = self.stamp().map_or(0, |s| s.counter) + 1;
        LwwRegister::with_stamp(Stamp { counter, replica }, value)
    }

    pub fn value(&self) -> Option<&Element> {
        self.entry.as_ref().map(|(_, v)| v)
    }

    pub fn stamp(&self) -> Option<Stamp> {
        self.entry.as_ref().map(|(s, _)| *s)
    }
}

impl JoinSemilattice for LwwRegister {
    fn bottom() -> Self {
        LwwRegister::new()
    }

    fn join(&self, other: &Self) -> Self {
        // Identical stamps only arise from fabricated states; comparing the
        // value as well keeps the join commutative for them.
        match (&self.entry, &other.entry) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                if a >= b {
                    self.clone()
                } else {
                    other.clone()
                }
            }
        }
    }
}
