use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::JoinSemilattice;
use crate::element::Element;

/// Grow-only set joined by union.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GSet {
    elements: BTreeSet<Element>,
}

impl GSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&self, element: Element) -> Self {
        let mut out = self.clone();
        out.elements.insert(element);
        out
    }

    pub fn contains(&self, element: &Element) -> bool {
        self.elements.contains(element)
    }

    pub fn elements(&self) -> &BTreeSet<Element> {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

impl FromIterator<Element> for GSet {
    fn from_iter<I: IntoIterator<Item = Element>>(iter: I) -> Self {
        GSet {
            elements: iter.into_iter().collect(),
        }
    }
}

impl JoinSemilattice for GSet {
    fn bottom() -> Self {
        GSet::new()
    }

    fn join(&self, other: &Self) -> Self {
        GSet {
            elements: self.elements.union(&other.elements).cloned().collect(),
        }
    }

    fn leq(&self, other: &Self) -> bool {
        self.elements.is_subset(&other.elements)
    }
}
