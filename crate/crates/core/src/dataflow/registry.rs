//! Named built-in element functions and predicates.
//!
//! Operators reference functions by id so that graph specs stay plain data that
//! every replica evaluates identically. An id is either an alias registered on
//! the [`FnRegistry`] or an expression over the built-in catalog:
//!
//! | function          | effect                                              |
//! |-------------------|-----------------------------------------------------|
//! | `identity`        | returns the element                                 |
//! | `scale:K`         | multiplies numbers by `K`                           |
//! | `offset:K`        | adds `K` to numbers                                 |
//! | `negate`          | negates numbers                                     |
//! | `pair-with:E`     | `e -> (e, E)`                                       |
//! | `tag:S`           | `e -> ("S", e)`                                     |
//! | `first`, `second` | projects a pair                                     |
//!
//! | predicate                  | holds when                                 |
//! |----------------------------|--------------------------------------------|
//! | `always`, `never`          | constant                                   |
//! | `gt:X` `ge:X` `lt:X` `le:X`| numeric comparison with `X`                |
//! | `eq:E`                     | equal to element `E`                       |
//! | `numeric`, `string`        | element variant test                       |
//! | `first:P`, `second:P`      | `P` holds on that pair component           |
//! | `not:P`                    | `P` does not hold                          |
//!
//! Every function is total: numeric functions leave non-numbers unchanged,
//! projections leave non-pairs unchanged, and predicates are false on
//! elements they do not understand.

use std::collections::BTreeMap;
use std::fmt;

use super::DataflowError;
use crate::element::Element;

/// A pure, total element transform.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementFn {
    Identity,
    Scale(Element),
    Offset(Element),
    Negate,
    PairWith(Element),
    Tag(String),
    First,
    Second,
}

impl ElementFn {
    pub fn apply(&self, e: &Element) -> Element {
        match self {
            ElementFn::Identity => e.clone(),
            ElementFn::Scale(k) => arith(e, k, i64::wrapping_mul, |a, b| a * b),
            ElementFn::Offset(k) => arith(e, k, i64::wrapping_add, |a, b| a + b),
            ElementFn::Negate => match e {
                Element::Int(i) => Element::Int(i.wrapping_neg()),
                Element::Float(f) => Element::Float(-f),
                other => other.clone(),
            },
            ElementFn::PairWith(c) => Element::pair(e.clone(), c.clone()),
            ElementFn::Tag(t) => Element::pair(Element::Str(t.clone()), e.clone()),
            ElementFn::First => match e {
                Element::Pair(p) => p.0.clone(),
                other => other.clone(),
            },
            ElementFn::Second => match e {
                Element::Pair(p) => p.1.clone(),
                other => other.clone(),
            },
        }
    }

    fn parse(id: &str) -> Option<Self> {
        let (name, arg) = split_id(id);
        Some(match (name, arg) {
            ("identity", None) => ElementFn::Identity,
            ("negate", None) => ElementFn::Negate,
            ("first", None) => ElementFn::First,
            ("second", None) => ElementFn::Second,
            ("scale", Some(k)) => ElementFn::Scale(numeric_arg(k)?),
            ("offset", Some(k)) => ElementFn::Offset(numeric_arg(k)?),
            ("pair-with", Some(e)) => ElementFn::PairWith(e.parse().ok()?),
            ("tag", Some(t)) if !t.is_empty() => ElementFn::Tag(t.to_owned()),
            _ => return None,
        })
    }
}

fn arith(
    e: &Element,
    k: &Element,
    int_op: fn(i64, i64) -> i64,
    float_op: fn(f64, f64) -> f64,
) -> Element {
    match (e, k) {
        (Element::Int(a), Element::Int(b)) => Element::Int(int_op(*a, *b)),
        (Element::Int(a), Element::Float(b)) => Element::Float(float_op(*a as f64, *b)),
        (Element::Float(a), _) => Element::Float(float_op(*a, k.as_f64().unwrap_or(0.0))),
        (other, _) => other.clone(),
    }
}

impl fmt::Display for ElementFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementFn::Identity => f.write_str("identity"),
            ElementFn::Scale(k) => write!(f, "scale:{k}"),
            ElementFn::Offset(k) => write!(f, "offset:{k}"),
            ElementFn::Negate => f.write_str("negate"),
            ElementFn::PairWith(e) => write!(f, "pair-with:{e}"),
            ElementFn::Tag(t) => write!(f, "tag:{t}"),
            ElementFn::First => f.write_str("first"),
            ElementFn::Second => f.write_str("second"),
        }
    }
}

/// A pure, total element predicate.
#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    Always,
    Never,
    Greater(f64),
    GreaterEq(f64),
    Less(f64),
    LessEq(f64),
    Equals(Element),
    Numeric,
    Text,
    First(Box<Predicate>),
    Second(Box<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn test(&self, e: &Element) -> bool {
        match self {
            Predicate::Always => true,
            Predicate::Never => false,
            Predicate::Greater(x) => e.as_f64().is_some_and(|v| v > *x),
            Predicate::GreaterEq(x) => e.as_f64().is_some_and(|v| v >= *x),
            Predicate::Less(x) => e.as_f64().is_some_and(|v| v < *x),
            Predicate::LessEq(x) => e.as_f64().is_some_and(|v| v <= *x),
            Predicate::Equals(c) => e == c,
            Predicate::Numeric => e.is_numeric(),
            Predicate::Text => matches!(e, Element::Str(_)),
            Predicate::First(p) => matches!(e, Element::Pair(pair) if p.test(&pair.0)),
            Predicate::Second(p) => matches!(e, Element::Pair(pair) if p.test(&pair.1)),
            Predicate::Not(p) => !p.test(e),
        }
    }

    fn parse(id: &str) -> Option<Self> {
        let (name, arg) = split_id(id);
        let threshold = |a: Option<&str>| {
            a.and_then(|s| s.parse::<f64>().ok())
                .filter(|x| !x.is_nan())
        };
        Some(match name {
            "always" if arg.is_none() => Predicate::Always,
            "never" if arg.is_none() => Predicate::Never,
            "numeric" if arg.is_none() => Predicate::Numeric,
            "string" if arg.is_none() => Predicate::Text,
            "gt" => Predicate::Greater(threshold(arg)?),
            "ge" => Predicate::GreaterEq(threshold(arg)?),
            "lt" => Predicate::Less(threshold(arg)?),
            "le" => Predicate::LessEq(threshold(arg)?),
            "eq" => Predicate::Equals(arg?.parse().ok()?),
            "first" => Predicate::First(Box::new(Predicate::parse(arg?)?)),
            "second" => Predicate::Second(Box::new(Predicate::parse(arg?)?)),
            "not" => Predicate::Not(Box::new(Predicate::parse(arg?)?)),
            _ => return None,
        })
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Always => f.write_str("always"),
            Predicate::Never => f.write_str("never"),
            Predicate::Greater(x) => write!(f, "gt:{x:?}"),
            Predicate::GreaterEq(x) => write!(f, "ge:{x:?}"),
            Predicate::Less(x) => write!(f, "lt:{x:?}"),
            Predicate::LessEq(x) => write!(f, "le:{x:?}"),
            Predicate::Equals(e) => write!(f, "eq:{e}"),
            Predicate::Numeric => f.write_str("numeric"),
            Predicate::Text => f.write_str("string"),
            Predicate::First(p) => write!(f, "first:{p}"),
            Predicate::Second(p) => write!(f, "second:{p}"),
            Predicate::Not(p) => write!(f, "not:{p}"),
        }
    }
}

fn split_id(id: &str) -> (&str, Option<&str>) {
    match id.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (id, None),
    }
}

fn numeric_arg(s: &str) -> Option<Element> {
    s.parse::<Element>().ok().filter(Element::is_numeric)
}

/// Resolves function and predicate ids.
#[derive(Clone, Debug, Default)]
pub struct FnRegistry {
    fn_aliases: BTreeMap<String, ElementFn>,
    pred_aliases: BTreeMap<String, Predicate>,
}

impl FnRegistry {
    /// The built-in catalog with no aliases.
    pub fn builtin() -> Self {
        Self::default()
    }

    /// Registers `name` as shorthand for a catalog function expression.
    pub fn alias_fn(&mut self, name: &str, expr: &str) -> Result<(), DataflowError> {
        let f = self.resolve_fn(expr)?;
        self.fn_aliases.insert(name.to_owned(), f);
        Ok(())
    }

    pub fn alias_predicate(&mut self, name: &str, expr: &str) -> Result<(), DataflowError> {
        let p = self.resolve_predicate(expr)?;
        self.pred_aliases.insert(name.to_owned(), p);
        Ok(())
    }

    pub fn resolve_fn(&self, id: &str) -> Result<ElementFn, DataflowError> {
        self.fn_aliases
            .get(id)
            .cloned()
            .or_else(|| ElementFn::parse(id))
            .ok_or_else(|| DataflowError::UnknownFn(id.to_owned()))
    }

    pub fn resolve_predicate(&self, id: &str) -> Result<Predicate, DataflowError> {
        self.pred_aliases
            .get(id)
            .cloned()
            .or_else(|| Predicate::parse(id))
            .ok_or_else(|| DataflowError::UnknownPredicate(id.to_owned()))
    }
}
