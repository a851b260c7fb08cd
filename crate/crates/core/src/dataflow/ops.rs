//! Provenance-preserving operators over observed-remove sets.
//!
//! Each operator keeps enough causal metadata in its output that the output of
//! merged inputs equals the merge of outputs. `map` and `filter` keep dots and
//! context verbatim. `union` namespaces dots by input side. `product` and
//! `intersection` pair the dots of the contributing entries.

use std::collections::BTreeMap;

use super::registry::{ElementFn, Predicate};
use super::DataflowError;
use crate::element::Element;
use crate::lattice::{DotTag, LwwRegister, ORSet, Provenance, Stamp};
use crate::replica::ReplicaId;

/// Replica id used to stamp fold results. Folds are recomputed from the same
/// inputs on every replica, so the stamp must not depend on who computed it.
pub const FOLD_REPLICA: ReplicaId = ReplicaId(u32::MAX);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FoldKind {
    Sum,
    Count,
}

pub fn map(s: &ORSet, f: &ElementFn) -> ORSet {
    let entries = s
        .entries()
        .iter()
        .map(|(tag, e)| (tag.clone(), f.apply(e)))
        .collect();
    ORSet::from_parts(entries, s.context().clone())
}

pub fn filter(s: &ORSet, p: &Predicate) -> ORSet {
    let entries = s
        .entries()
        .iter()
        .filter(|(_, e)| p.test(e))
        .map(|(tag, e)| (tag.clone(), e.clone()))
        .collect();
    ORSet::from_parts(entries, s.context().clone())
}

pub fn union(a: &ORSet, b: &ORSet) -> ORSet {
    let left = a
        .entries()
        .iter()
        .map(|(tag, e)| (DotTag::Left(Box::new(tag.clone())), e.clone()));
    let right = b
        .entries()
        .iter()
        .map(|(tag, e)| (DotTag::Right(Box::new(tag.clone())), e.clone()));
    ORSet::from_parts(
        left.chain(right).collect(),
        Provenance::sides(a.context().clone(), b.context().clone()),
    )
}

/// Entries for every pair of live entries holding equal elements.
pub fn intersection(a: &ORSet, b: &ORSet) -> ORSet {
    let mut by_element: BTreeMap<&Element, Vec<&DotTag>> = BTreeMap::new();
    for (tag, e) in b.entries() {
        by_element.entry(e).or_default().push(tag);
    }
    let mut entries = BTreeMap::new();
    for (tag_a, e) in a.entries() {
        for tag_b in by_element.get(e).into_iter().flatten() {
            entries.insert(DotTag::pair(tag_a.clone(), (*tag_b).clone()), e.clone());
        }
    }
    ORSet::from_parts(
        entries,
        Provenance::pairs(a.context().clone(), b.context().clone()),
    )
}

pub fn product(a: &ORSet, b: &ORSet) -> ORSet {
    let mut entries = BTreeMap::new();
    for (tag_a, e_a) in a.entries() {
        for (tag_b, e_b) in b.entries() {
            entries.insert(
                DotTag::pair(tag_a.clone(), tag_b.clone()),
                Element::pair(e_a.clone(), e_b.clone()),
            );
        }
    }
    ORSet::from_parts(
        entries,
        Provenance::pairs(a.context().clone(), b.context().clone()),
    )
}

/// Recomputes an aggregate over the distinct live elements.
///
/// The result is a register stamped with the number of input events the set
/// has observed, so a fold over a larger view carries a larger stamp.
pub fn fold(s: &ORSet, kind: FoldKind) -> Result<LwwRegister, DataflowError> {
    let elements = s.elements();
    let value = match kind {
        FoldKind::Count => Element::Int(elements.len() as i64),
        FoldKind::Sum => {
            if let Some(bad) = elements.iter().find(|e| !e.is_numeric()) {
                return Err(DataflowError::NonNumeric(bad.clone()));
            }
            if elements.iter().all(|e| matches!(e, Element::Int(_))) {
                let mut total = 0i64;
                for e in &elements {
                    if let Element::Int(i) = e {
                        total = total.checked_add(*i).ok_or(DataflowError::FoldOverflow)?;
                    }
                }
                Element::Int(total)
            } else {
                Element::Float(elements.iter().filter_map(Element::as_f64).sum())
            }
        }
    };
    let stamp = Stamp {
        counter: s.context().event_count(),
        replica: FOLD_REPLICA,
    };
    Ok(LwwRegister::with_stamp(stamp, value))
}
