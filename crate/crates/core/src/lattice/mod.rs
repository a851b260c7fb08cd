//! Join-semilattice CRDTs.
//!
//! Every type here forms a join-semilattice: `join` is associative,
//! commutative and idempotent, `bottom` is its identity, and
//! `leq(a, b) <=> join(a, b) == b`. Values are compared structurally; each
//! type keeps a canonical representation (no zero counter entries, normalized
//! causal contexts) so structural equality coincides with lattice equality.

mod gcounter;
mod gset;
mod lww;
mod orset;
mod pncounter;
mod value;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gcounter::GCounter;
pub use gset::GSet;
pub use lww::{LwwRegister, Stamp};
pub use orset::{DotTag, ORSet, Provenance};
pub use pncounter::PNCounter;
pub use value::{LatticeValue, Mutation};

use crate::causality::{CausalContext, VersionVector};

/// A join-semilattice whose join cannot fail.
pub trait JoinSemilattice: Clone + PartialEq {
    fn bottom() -> Self;

    fn join(&self, other: &Self) -> Self;

    fn leq(&self, other: &Self) -> bool {
        self.join(other) == *other
    }
}

impl JoinSemilattice for VersionVector {
    fn bottom() -> Self {
        VersionVector::new()
    }

    fn join(&self, other: &Self) -> Self {
        self.merge(other)
    }
}

impl JoinSemilattice for CausalContext {
    fn bottom() -> Self {
        CausalContext::new()
    }

    fn join(&self, other: &Self) -> Self {
        self.merge(other)
    }
}

/// The supported CRDT variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    GCounter,
    PNCounter,
    GSet,
    ORSet,
    #[serde(rename = "lww")]
    LwwRegister,
}

impl LatticeKind {
    pub const ALL: [LatticeKind; 5] = [
        LatticeKind::GCounter,
        LatticeKind::PNCounter,
        LatticeKind::GSet,
        LatticeKind::ORSet,
        LatticeKind::LwwRegister,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::GCounter => "gcounter",
            LatticeKind::PNCounter => "pncounter",
            LatticeKind::GSet => "gset",
            LatticeKind::ORSet => "orset",
            LatticeKind::LwwRegister => "lww",
        }
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LatticeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LatticeError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("cannot combine a {left} with a {right}")]
    KindMismatch {
        left: LatticeKind,
        right: LatticeKind,
    },
    #[error("sets derived through different operator shapes cannot be joined")]
    ShapeMismatch,
    #[error("unknown lattice kind `{0}`")]
    UnknownKind(String),
    #[error("counter increments must be at least 1")]
    ZeroAmount,
    #[error("counter overflow")]
    Overflow,
    #[error("mutation `{mutation}` does not apply to a {kind}")]
    UnsupportedMutation { kind: LatticeKind, mutation: String },
    #[error("only input sets can allocate new dots; this set is derived")]
    DerivedSet,
}
