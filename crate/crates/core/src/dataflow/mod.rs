//! Composition of replicated sets into derived views.
//!
//! A [`GraphSpec`] names input variables (each holding a CRDT) and derived
//! variables computed from earlier variables by one operator from a fixed
//! catalog. A [`DataflowGraph`] owns a spec plus the current value of every
//! variable and keeps derived values equal to a recomputation from the inputs.

mod graph;
pub mod ops;
pub mod registry;
mod spec;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::DataflowGraph;
pub use ops::FoldKind;
pub use registry::{ElementFn, FnRegistry, Predicate};
pub use spec::GraphSpec;

use crate::element::Element;
use crate::lattice::{LatticeError, LatticeKind};

/// Name of a variable in a dataflow graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(String);

impl VarId {
    pub fn new(name: impl Into<String>) -> Self {
        VarId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn is_valid(name: &str) -> bool {
        !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VarId {
    fn from(s: &str) -> Self {
        VarId(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Map(String),
    Filter(String),
    Union,
    Intersection,
    Product,
    FoldSum,
    FoldCount,
}

impl Op {
    pub fn arity(&self) -> usize {
        match self {
            Op::Union | Op::Intersection | Op::Product => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Op::Map(_) => "map",
            Op::Filter(_) => "filter",
            Op::Union => "union",
            Op::Intersection => "intersection",
            Op::Product => "product",
            Op::FoldSum => "fold_sum",
            Op::FoldCount => "fold_count",
        }
    }

    pub fn output_kind(&self) -> LatticeKind {
        match self {
            Op::FoldSum | Op::FoldCount => LatticeKind::LwwRegister,
            _ => LatticeKind::ORSet,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSpec {
    Input(LatticeKind),
    Derived { op: Op, inputs: Vec<VarId> },
}

impl NodeSpec {
    pub fn input(kind: LatticeKind) -> Self {
        NodeSpec::Input(kind)
    }

    pub fn derived(op: Op, inputs: &[&str]) -> Self {
        NodeSpec::Derived {
            op,
            inputs: inputs.iter().map(|s| VarId::from(*s)).collect(),
        }
    }

    pub fn kind(&self) -> LatticeKind {
        match self {
            NodeSpec::Input(kind) => *kind,
            NodeSpec::Derived { op, .. } => op.output_kind(),
        }
    }

    pub fn inputs(&self) -> &[VarId] {
        match self {
            NodeSpec::Input(_) => &[],
            NodeSpec::Derived { inputs, .. } => inputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataflowError {
    #[error("unknown variable `{0}`")]
    UnknownVar(VarId),
    #[error("variable `{0}` is already declared")]
    DuplicateVar(VarId),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("declaring `{0}` would create a cycle")]
    Cycle(VarId),
    #[error("{op} takes {expected} input(s), got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("`{var}` is a {found}, but {op} needs an orset input")]
    InputKind {
        var: VarId,
        op: &'static str,
        found: LatticeKind,
    },
    #[error("`{0}` is derived; only inputs accept updates and merges")]
    NotAnInput(VarId),
    #[error("unknown function id `{0}`")]
    UnknownFn(String),
    #[error("unknown predicate id `{0}`")]
    UnknownPredicate(String),
    #[error("fold_sum over non-numeric element {0}")]
    NonNumeric(Element),
    #[error("fold_sum overflowed")]
    FoldOverflow,
    #[error("graph spec line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}
