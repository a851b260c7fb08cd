//! Add-wins observed-remove set over dotted entries.
//!
//! The set stores `dot -> element` entries plus the causal context of every dot
//! it has ever observed. Removing an element drops its entries but keeps their
//! dots in the context, so a later join knows the removal happened without a
//! tombstone. An add that the remover never saw carries a dot outside the
//! remover's context and therefore survives the join.
//!
//! Sets produced by dataflow operators use the same representation with
//! namespaced dots: a union tags each entry with the side it came from and a
//! product or intersection pairs the dots of both inputs. [`Provenance`]
//! mirrors that shape so membership of a namespaced dot can be decided.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LatticeError;
use crate::causality::{CausalContext, Dot};
use crate::element::Element;
use crate::replica::ReplicaId;
use crate::serde_util::sorted_pairs;

/// Identifier of an entry: a plain event dot for input sets, or a namespaced
/// composite for derived sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotTag {
    Event(Dot),
    /// Entry taken from the first input of a union.
    Left(Box<DotTag>),
    /// Entry taken from the second input of a union.
    Right(Box<DotTag>),
    /// Entry produced by one live entry of each input.
    Pair(Box<(DotTag, DotTag)>),
}

impl DotTag {
    pub fn pair(left: DotTag, right: DotTag) -> Self {
        DotTag::Pair(Box::new((left, right)))
    }

    /// The input event dots this tag was built from.
    pub fn events(&self) -> Vec<Dot> {
        let mut out = Vec::new();
        self.collect_events(&mut out);
        out
    }

    fn collect_events(&self, out: &mut Vec<Dot>) {
        match self {
            DotTag::Event(d) => out.push(*d),
            DotTag::Left(t) | DotTag::Right(t) => t.collect_events(out),
            DotTag::Pair(p) => {
                p.0.collect_events(out);
                p.1.collect_events(out);
            }
        }
    }
}

impl From<Dot> for DotTag {
    fn from(dot: Dot) -> Self {
        DotTag::Event(dot)
    }
}

impl fmt::Display for DotTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DotTag::Event(d) => write!(f, "{d}"),
            DotTag::Left(t) => write!(f, "0/{t}"),
            DotTag::Right(t) => write!(f, "1/{t}"),
            DotTag::Pair(p) => write!(f, "<{},{}>", p.0, p.1),
        }
    }
}

/// Causal record of a set, shaped like the operator tree that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Context(CausalContext),
    Sides(Box<(Provenance, Provenance)>),
    Pairs(Box<(Provenance, Provenance)>),
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance::Context(CausalContext::new())
    }
}

impl Provenance {
    pub fn sides(left: Provenance, right: Provenance) -> Self {
        Provenance::Sides(Box::new((left, right)))
    }

    pub fn pairs(left: Provenance, right: Provenance) -> Self {
        Provenance::Pairs(Box::new((left, right)))
    }

    pub fn is_empty_context(&self) -> bool {
        matches!(self, Provenance::Context(cc) if cc.is_empty())
    }

    pub fn as_context(&self) -> Option<&CausalContext> {
        match self {
            Provenance::Context(cc) => Some(cc),
            _ => None,
        }
    }

    /// Whether the tagged dot has been observed. A pair is observed once both
    /// halves are.
    pub fn contains(&self, tag: &DotTag) -> bool {
        match (self, tag) {
            (Provenance::Context(cc), DotTag::Event(d)) => cc.contains(d),
            (Provenance::Sides(s), DotTag::Left(t)) => s.0.contains(t),
            (Provenance::Sides(s), DotTag::Right(t)) => s.1.contains(t),
            (Provenance::Pairs(p), DotTag::Pair(t)) => p.0.contains(&t.0) && p.1.contains(&t.1),
            _ => false,
        }
    }

    /// Joins two records of the same shape. The empty context is the identity
    /// for every shape.
    pub fn merge(&self, other: &Self) -> Result<Self, LatticeError> {
        if other.is_empty_context() {
            return Ok(self.clone());
        }
        if self.is_empty_context() {
            return Ok(other.clone());
        }
        match (self, other) {
            (Provenance::Context(a), Provenance::Context(b)) => Ok(Provenance::Context(a.merge(b))),
            (Provenance::Sides(a), Provenance::Sides(b)) => {
                Ok(Provenance::sides(a.0.merge(&b.0)?, a.1.merge(&b.1)?))
            }
            (Provenance::Pairs(a), Provenance::Pairs(b)) => {
                Ok(Provenance::pairs(a.0.merge(&b.0)?, a.1.merge(&b.1)?))
            }
            _ => Err(LatticeError::ShapeMismatch),
        }
    }

    /// Total number of input events recorded.
    pub fn event_count(&self) -> u64 {
        match self {
            Provenance::Context(cc) => cc.event_count(),
            Provenance::Sides(p) | Provenance::Pairs(p) => p.0.event_count() + p.1.event_count(),
        }
    }
}

/// Add-wins observed-remove set.
///
/// Invariant: every entry's tag is contained in `context`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ORSet {
    #[serde(with = "sorted_pairs")]
    entries: BTreeMap<DotTag, Element>,
    context: Provenance,
}

impl ORSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from raw parts. Callers must uphold the context invariant;
    /// see [`ORSet::is_well_formed`].
    pub fn from_parts(entries: BTreeMap<DotTag, Element>, context: Provenance) -> Self {
        ORSet { entries, context }
    }

    pub fn entries(&self) -> &BTreeMap<DotTag, Element> {
        &self.entries
    }

    pub fn context(&self) -> &Provenance {
        &self.context
    }

    pub fn is_derived(&self) -> bool {
        !matches!(self.context, Provenance::Context(_))
    }

    pub fn is_well_formed(&self) -> bool {
        self.entries.keys().all(|tag| self.context.contains(tag))
    }

    /// Adds `element` under a freshly allocated dot of `replica`.
    pub fn add(&self, replica: ReplicaId, element: Element) -> Result<Self, LatticeError> {
        let Provenance::Context(cc) = &self.context else {
            return Err(LatticeError::DerivedSet);
        };
        let (dot, context) = cc.next_dot(replica);
        let mut entries = self.entries.clone();
        entries.insert(DotTag::Event(dot), element);
        Ok(ORSet {
            entries,
            context: Provenance::Context(context),
        })
    }

    /// Drops every entry holding `element`; their dots stay in the context.
    pub fn remove(&self, element: &Element) -> Self {
        ORSet {
            entries: self
                .entries
                .iter()
                .filter(|(_, e)| *e != element)
                .map(|(t, e)| (t.clone(), e.clone()))
                .collect(),
            context: self.context.clone(),
        }
    }

    /// Distinct live element values.
    pub fn elements(&self) -> BTreeSet<Element> {
        self.entries.values().cloned().collect()
    }

    pub fn contains(&self, element: &Element) -> bool {
        self.entries.values().any(|e| e == element)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps an entry unless the other side has observed its dot and no longer
    /// holds it.
    pub fn join(&self, other: &Self) -> Result<Self, LatticeError> {
        let context = self.context.merge(&other.context)?;
        let mut entries = BTreeMap::new();
        for (tag, element) in &self.entries {
            match other.entries.get(tag) {
                // A dot names one event, so both sides normally agree; the max
                // keeps the join commutative when they do not.
                Some(theirs) => {
                    entries.insert(tag.clone(), element.max(theirs).clone());
                }
                None if !other.context.contains(tag) => {
                    entries.insert(tag.clone(), element.clone());
                }
                None => {}
            }
        }
        for (tag, element) in &other.entries {
            if !self.entries.contains_key(tag) && !self.context.contains(tag) {
                entries.insert(tag.clone(), element.clone());
            }
        }
        Ok(ORSet { entries, context })
    }

    pub fn leq(&self, other: &Self) -> Result<bool, LatticeError> {
        Ok(self.join(other)? == *other)
    }
}
