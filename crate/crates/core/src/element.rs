//! The element universe stored in sets and registers.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A value stored in a set or register.
///
/// Floats compare bitwise: `0.0` and `-0.0` are different elements and a NaN
/// equals itself. Ordering uses [`f64::total_cmp`], which agrees with bitwise
/// equality.
#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "Repr")]
pub enum Element {
    Int(i64),
    Float(f64),
    Str(String),
    Pair(Box<(Element, Element)>),
}

impl Element {
    pub fn str(s: impl Into<String>) -> Self {
        Element::Str(s.into())
    }

    pub fn pair(first: Element, second: Element) -> Self {
        Element::Pair(Box::new((first, second)))
    }

    /// Numeric view used by predicates and folds.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Element::Int(i) => Some(*i as f64),
            Element::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Element::Int(_) | Element::Float(_))
    }

    fn rank(&self) -> u8 {
        match self {
            Element::Int(_) => 0,
            Element::Float(_) => 1,
            Element::Str(_) => 2,
            Element::Pair(_) => 3,
        }
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Element {}

impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Element {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Element::Int(a), Element::Int(b)) => a.cmp(b),
            (Element::Float(a), Element::Float(b)) => a.total_cmp(b),
            (Element::Str(a), Element::Str(b)) => a.cmp(b),
            (Element::Pair(a), Element::Pair(b)) => a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Element {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Element::Int(i) => i.hash(state),
            Element::Float(f) => f.to_bits().hash(state),
            Element::Str(s) => s.hash(state),
            Element::Pair(p) => {
                p.0.hash(state);
                p.1.hash(state);
            }
        }
    }
}

impl From<i64> for Element {
    fn from(v: i64) -> Self {
        Element::Int(v)
    }
}

impl From<f64> for Element {
    fn from(v: f64) -> Self {
        Element::Float(v)
    }
}

impl From<&str> for Element {
    fn from(v: &str) -> Self {
        Element::Str(v.to_owned())
    }
}

impl From<String> for Element {
    fn from(v: String) -> Self {
        Element::Str(v)
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Element::Int(i) => serializer.serialize_newtype_variant("Element", 0, "int", i),
            Element::Float(f) if f.is_finite() => {
                serializer.serialize_newtype_variant("Element", 1, "float", f)
            }
            // JSON numbers cannot carry NaN or infinities.
            Element::Float(f) => serializer.serialize_newtype_variant(
                "Element",
                2,
                "float_bits",
                &format!("{:016x}", f.to_bits()),
            ),
            Element::Str(s) => serializer.serialize_newtype_variant("Element", 3, "str", s),
            Element::Pair(p) => {
                serializer.serialize_newtype_variant("Element", 4, "pair", &(&p.0, &p.1))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum Repr {
    Int(i64),
    Float(f64),
    FloatBits(String),
    Str(String),
    Pair(Box<(Element, Element)>),
}

impl TryFrom<Repr> for Element {
    type Error = String;

    fn try_from(repr: Repr) -> Result<Self, Self::Error> {
        Ok(match repr {
            Repr::Int(i) => Element::Int(i),
            Repr::Float(f) => Element::Float(f),
            Repr::FloatBits(bits) => Element::Float(f64::from_bits(
                u64::from_str_radix(&bits, 16).map_err(|e| format!("bad float bits: {e}"))?,
            )),
            Repr::Str(s) => Element::Str(s),
            Repr::Pair(p) => Element::Pair(p),
        })
    }
}

/// Text form: `42`, `4.5`, `"tag"`, `("n1", 9.5)`.
impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Int(i) => write!(f, "{i}"),
            Element::Float(x) => write!(f, "{x:?}"),
            Element::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Element::Pair(p) => write!(f, "({}, {})", p.0, p.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid element `{input}`: {reason}")]
pub struct ParseElementError {
    pub input: String,
    pub reason: &'static str,
}

impl FromStr for Element {
    type Err = ParseElementError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseElementError {
            input: s.to_owned(),
            reason,
        };
        let mut parser = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let element = parser.element().map_err(err)?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(err("trailing input"));
        }
        Ok(element)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, byte: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn element(&mut self) -> Result<Element, &'static str> {
        self.skip_ws();
        match self.src.get(self.pos) {
            None => Err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let first = self.element()?;
                if !self.eat(b',') {
                    return Err("expected `,` in pair");
                }
                let second = self.element()?;
                if !self.eat(b')') {
                    return Err("expected `)` closing pair");
                }
                Ok(Element::pair(first, second))
            }
            Some(b'"') => {
                self.pos += 1;
                let mut out = Vec::new();
                loop {
                    match self.src.get(self.pos) {
                        None => return Err("unterminated string"),
                        Some(b'"') => {
                            self.pos += 1;
                            break;
                        }
                        Some(b'\\') => {
                            let escaped = *self.src.get(self.pos + 1).ok_or("dangling escape")?;
                            out.push(escaped);
                            self.pos += 2;
                        }
                        Some(&b) => {
                            out.push(b);
                            self.pos += 1;
                        }
                    }
                }
                String::from_utf8(out)
                    .map(Element::Str)
                    .map_err(|_| "string is not utf-8")
            }
            Some(_) => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && !matches!(self.src[self.pos], b',' | b')')
                    && !self.src[self.pos].is_ascii_whitespace()
                {
                    self.pos += 1;
                }
                let token =
                    std::str::from_utf8(&self.src[start..self.pos]).map_err(|_| "bad token")?;
                if let Ok(i) = token.parse::<i64>() {
                    return Ok(Element::Int(i));
                }
                token
                    .parse::<f64>()
                    .map(Element::Float)
                    .map_err(|_| "not a number, string or pair")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_compare_bitwise() {
        assert_ne!(Element::Float(0.0), Element::Float(-0.0));
        assert_eq!(Element::Float(f64::NAN), Element::Float(f64::NAN));
        assert_ne!(Element::Int(1), Element::Float(1.0));
    }

    #[test]
    fn text_round_trip() {
        for text in [
            "42",
            "-7",
            "4.0",
            "9.5",
            "\"x\"",
            "(\"n1\", 9.5)",
            "((1, 2), \"a\\\"b\")",
        ] {
            let element: Element = text.parse().unwrap();
            assert_eq!(element.to_string(), text);
            assert_eq!(element.to_string().parse::<Element>().unwrap(), element);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!("(1, 2".parse::<Element>().is_err());
        assert!("abc".parse::<Element>().is_err());
        assert!("1 2".parse::<Element>().is_err());
    }

    #[test]
    fn json_keeps_non_finite_floats() {
        let nan = Element::Float(f64::from_bits(0x7ff8_0000_0000_0001));
        let json = serde_json::to_string(&nan).unwrap();
        let back: Element = serde_json::from_str(&json).unwrap();
        assert_eq!(back, nan);
        let pair = Element::pair("a".into(), Element::Float(1.5));
        assert_eq!(
            serde_json::to_string(&pair).unwrap(),
            r#"{"pair":[{"str":"a"},{"float":1.5}]}"#
        );
    }
}
