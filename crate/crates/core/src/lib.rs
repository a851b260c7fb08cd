//! Convergent edge computation primitives.
//!
//! The crate is organised bottom-up:
//!
//! - [`causality`]: dots, version vectors and compacted causal contexts.
//! - [`lattice`]: join-semilattice CRDTs (`GCounter`, `PNCounter`, `GSet`,
//!   add-wins `ORSet`, `LwwRegister`) and the [`LatticeValue`] union that is
//!   replicated and joined.
//! - [`dataflow`]: a DAG of input variables and derived views built from a
//!   fixed catalog of functional and set-theoretic operators. Derived sets keep
//!   the dots of the inputs that produced them, so a view computed on merged
//!   inputs equals the merge of views computed separately.
//! - [`sim`]: a seeded, round-based push-pull gossip simulator with drops,
//!   duplicates, delays and partitions.
//!
//! Every value is immutable from the caller's point of view: mutators return a
//! new value and joins never modify their arguments.

pub mod causality;
pub mod dataflow;
pub mod element;
pub mod lattice;
pub mod replica;
mod serde_util;
pub mod sim;
pub mod testkit;

pub use causality::{CausalContext, Causality, Dot, VersionVector};
pub use dataflow::{DataflowError, DataflowGraph, FnRegistry, GraphSpec, NodeSpec, Op, VarId};
pub use element::Element;
pub use lattice::{
    DotTag, GCounter, GSet, LatticeError, LatticeKind, LatticeValue, LwwRegister, Mutation, ORSet,
    PNCounter, Provenance, Stamp,
};
pub use replica::ReplicaId;
