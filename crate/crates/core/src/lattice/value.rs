use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    GCounter, GSet, JoinSemilattice, LatticeError, LatticeKind, LwwRegister, ORSet, PNCounter,
};
use crate::element::Element;
use crate::replica::ReplicaId;

/// A replicated value of one of the supported CRDT kinds.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeValue {
    GCounter(GCounter),
    PNCounter(PNCounter),
    GSet(GSet),
    ORSet(ORSet),
    #[serde(rename = "lww")]
    LwwRegister(LwwRegister),
}

/// A local update applied at the replica that owns the state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    Increment(u64),
    Decrement(u64),
    /// Grow-only set insert.
    Insert(Element),
    /// Observed-remove set add.
    Add(Element),
    Remove(Element),
    Write(Element),
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mutation::Increment(n) => write!(f, "increment({n})"),
            Mutation::Decrement(n) => write!(f, "decrement({n})"),
            Mutation::Insert(e) => write!(f, "insert({e})"),
            Mutation::Add(e) => write!(f, "add({e})"),
            Mutation::Remove(e) => write!(f, "remove({e})"),
            Mutation::Write(e) => write!(f, "write({e})"),
        }
    }
}

impl LatticeValue {
    pub fn bottom(kind: LatticeKind) -> Self {
        match kind {
            LatticeKind::GCounter => LatticeValue::GCounter(GCounter::new()),
            LatticeKind::PNCounter => LatticeValue::PNCounter(PNCounter::new()),
            LatticeKind::GSet => LatticeValue::GSet(GSet::new()),
            LatticeKind::ORSet => LatticeValue::ORSet(ORSet::new()),
            LatticeKind::LwwRegister => LatticeValue::LwwRegister(LwwRegister::new()),
        }
    }

    /// Bottom for a kind given by name, e.g. `"orset"`.
    pub fn bottom_named(kind: &str) -> Result<Self, LatticeError> {
        Ok(Self::bottom(kind.parse()?))
    }

    pub fn kind(&self) -> LatticeKind {
        match self {
            LatticeValue::GCounter(_) => LatticeKind::GCounter,
            LatticeValue::PNCounter(_) => LatticeKind::PNCounter,
            LatticeValue::GSet(_) => LatticeKind::GSet,
            LatticeValue::ORSet(_) => LatticeKind::ORSet,
            LatticeValue::LwwRegister(_) => LatticeKind::LwwRegister,
        }
    }

    pub fn join(&self, other: &Self) -> Result<Self, LatticeError> {
        Ok(match (self, other) {
            (LatticeValue::GCounter(a), LatticeValue::GCounter(b)) => {
                LatticeValue::GCounter(a.join(b))
            }
            (LatticeValue::PNCounter(a), LatticeValue::PNCounter(b)) => {
                LatticeValue::PNCounter(a.join(b))
            }
            (LatticeValue::GSet(a), LatticeValue::GSet(b)) => LatticeValue::GSet(a.join(b)),
            (LatticeValue::ORSet(a), LatticeValue::ORSet(b)) => LatticeValue::ORSet(a.join(b)?),
            (LatticeValue::LwwRegister(a), LatticeValue::LwwRegister(b)) => {
                LatticeValue::LwwRegister(a.join(b))
            }
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn leq(&self, other: &Self) -> Result<bool, LatticeError> {
        Ok(match (self, other) {
            (LatticeValue::GCounter(a), LatticeValue::GCounter(b)) => a.leq(b),
            (LatticeValue::PNCounter(a), LatticeValue::PNCounter(b)) => a.leq(b),
            (LatticeValue::GSet(a), LatticeValue::GSet(b)) => a.leq(b),
            (LatticeValue::ORSet(a), LatticeValue::ORSet(b)) => a.leq(b)?,
            (LatticeValue::LwwRegister(a), LatticeValue::LwwRegister(b)) => a.leq(b),
            _ => return Err(self.mismatch(other)),
        })
    }

    /// Applies a local mutation on behalf of `replica`. The result dominates
    /// `self` in lattice order.
    pub fn apply(&self, replica: ReplicaId, mutation: &Mutation) -> Result<Self, LatticeError> {
        Ok(match (self, mutation) {
            (LatticeValue::GCounter(c), Mutation::Increment(n)) => {
                LatticeValue::GCounter(c.increment(replica, *n)?)
            }
            (LatticeValue::PNCounter(c), Mutation::Increment(n)) => {
                LatticeValue::PNCounter(c.increment(replica, *n)?)
            }
            (LatticeValue::PNCounter(c), Mutation::Decrement(n)) => {
                LatticeValue::PNCounter(c.decrement(replica, *n)?)
            }
            (LatticeValue::GSet(s), Mutation::Insert(e)) => LatticeValue::GSet(s.insert(e.clone())),
            (LatticeValue::ORSet(s), Mutation::Add(e)) => {
                LatticeValue::ORSet(s.add(replica, e.clone())?)
            }
            (LatticeValue::ORSet(s), Mutation::Remove(e)) => LatticeValue::ORSet(s.remove(e)),
            (LatticeValue::LwwRegister(r), Mutation::Write(e)) => {
                LatticeValue::LwwRegister(r.write(replica, e.clone()))
            }
            _ => {
                return Err(LatticeError::UnsupportedMutation {
                    kind: self.kind(),
                    mutation: mutation.to_string(),
                })
            }
        })
    }

    pub fn as_orset(&self) -> Option<&ORSet> {
        match self {
            LatticeValue::ORSet(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_lww(&self) -> Option<&LwwRegister> {
        match self {
            LatticeValue::LwwRegister(r) => Some(r),
            _ => None,
        }
    }

    /// Deterministic JSON encoding: field order is fixed and every map is
    /// emitted sorted by key, so equal values encode to identical bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("lattice values always serialize")
    }

    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("lattice values always serialize")
    }

    fn mismatch(&self, other: &Self) -> LatticeError {
        LatticeError::KindMismatch {
            left: self.kind(),
            right: other.kind(),
        }
    }
}

impl From<GCounter> for LatticeValue {
    fn from(v: GCounter) -> Self {
        LatticeValue::GCounter(v)
    }
}

impl From<PNCounter> for LatticeValue {
    fn from(v: PNCounter) -> Self {
        LatticeValue::PNCounter(v)
    }
}

impl From<GSet> for LatticeValue {
    fn from(v: GSet) -> Self {
        LatticeValue::GSet(v)
    }
}

impl From<ORSet> for LatticeValue {
    fn from(v: ORSet) -> Self {
        LatticeValue::ORSet(v)
    }
}

impl From<LwwRegister> for LatticeValue {
    fn from(v: LwwRegister) -> Self {
        LatticeValue::LwwRegister(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: ReplicaId = ReplicaId(0);

    #[test]
    fn bottoms_are_empty() {
        for kind in LatticeKind::ALL {
            let b = LatticeValue::bottom(kind);
            assert_eq!(b.kind(), kind);
            assert_eq!(b.join(&b).unwrap(), b);
        }
        assert!(matches!(
            LatticeValue::bottom_named("vector"),
            Err(LatticeError::UnknownKind(_))
        ));
        assert_eq!(
            LatticeValue::bottom_named("orset").unwrap(),
            ORSet::new().into()
        );
    }

    #[test]
    fn cross_variant_join_fails() {
        let a = LatticeValue::bottom(LatticeKind::GCounter);
        let b = LatticeValue::bottom(LatticeKind::GSet);
        assert_eq!(
            a.join(&b),
            Err(LatticeError::KindMismatch {
                left: LatticeKind::GCounter,
                right: LatticeKind::GSet
            })
        );
        assert!(a.leq(&b).is_err());
    }

    #[test]
    fn mutation_kind_is_checked() {
        let gc = LatticeValue::bottom(LatticeKind::GCounter);
        assert!(gc.apply(A, &Mutation::Decrement(1)).is_err());
        assert!(gc.apply(A, &Mutation::Add("x".into())).is_err());
        let bumped = gc.apply(A, &Mutation::Increment(2)).unwrap();
        assert!(gc.leq(&bumped).unwrap());
    }

    #[test]
    fn canonical_encoding_is_sorted() {
        let s = ORSet::new()
            .add(ReplicaId(2), "b".into())
            .unwrap()
            .add(ReplicaId(1), "a".into())
            .unwrap();
        let text = LatticeValue::from(s.clone()).canonical_string();
        assert!(text.find("\"replica\":1").unwrap() < text.find("\"replica\":2").unwrap());
        let back: LatticeValue = serde_json::from_str(&text).unwrap();
        assert_eq!(back, LatticeValue::ORSet(s));
    }
}
