use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DataflowError, FnRegistry, NodeSpec, Op, VarId};
use crate::lattice::LatticeKind;

/// The topology of a computation: which variables exist and how derived ones
/// are computed. Specs are plain data and can be shipped between replicas.
///
/// The text form has one node per line, in name order:
///
/// ```text
/// alerts = filter[second:gt:8.0](readings)
/// readings = input orset
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphSpec {
    nodes: BTreeMap<VarId, NodeSpec>,
}

impl GraphSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &BTreeMap<VarId, NodeSpec> {
        &self.nodes
    }

    pub fn get(&self, id: &VarId) -> Option<&NodeSpec> {
        self.nodes.get(id)
    }

    pub fn inputs(&self) -> impl Iterator<Item = (&VarId, LatticeKind)> {
        self.nodes.iter().filter_map(|(id, node)| match node {
            NodeSpec::Input(kind) => Some((id, *kind)),
            NodeSpec::Derived { .. } => None,
        })
    }

    pub fn is_input(&self, id: &VarId) -> bool {
        matches!(self.nodes.get(id), Some(NodeSpec::Input(_)))
    }

    /// Adds a node whose inputs must already be declared.
    pub fn declare(
        &mut self,
        id: VarId,
        node: NodeSpec,
        registry: &FnRegistry,
    ) -> Result<(), DataflowError> {
        if !VarId::is_valid(id.as_str()) {
            return Err(DataflowError::InvalidName(id.as_str().to_owned()));
        }
        if self.nodes.contains_key(&id) {
            return Err(DataflowError::DuplicateVar(id));
        }
        if node.inputs().contains(&id) {
            return Err(DataflowError::Cycle(id));
        }
        self.check_node(&node, registry)?;
        self.nodes.insert(id, node);
        Ok(())
    }

    /// Checks every node and returns a topological order, ties broken by name.
    pub fn validate(&self, registry: &FnRegistry) -> Result<Vec<VarId>, DataflowError> {
        for (id, node) in &self.nodes {
            if !VarId::is_valid(id.as_str()) {
                return Err(DataflowError::InvalidName(id.as_str().to_owned()));
            }
            self.check_node(node, registry)?;
        }
        self.topo_order()
    }

    fn check_node(&self, node: &NodeSpec, registry: &FnRegistry) -> Result<(), DataflowError> {
        let NodeSpec::Derived { op, inputs } = node else {
            return Ok(());
        };
        if inputs.len() != op.arity() {
            return Err(DataflowError::Arity {
                op: op.name(),
                expected: op.arity(),
                got: inputs.len(),
            });
        }
        for input in inputs {
            let found = self
                .nodes
                .get(input)
                .ok_or_else(|| DataflowError::UnknownVar(input.clone()))?
                .kind();
            if found != LatticeKind::ORSet {
                return Err(DataflowError::InputKind {
                    var: input.clone(),
                    op: op.name(),
                    found,
                });
            }
        }
        match op {
            Op::Map(id) => registry.resolve_fn(id).map(drop),
            Op::Filter(id) => registry.resolve_predicate(id).map(drop),
            _ => Ok(()),
        }
    }

    fn topo_order(&self) -> Result<Vec<VarId>, DataflowError> {
        let mut pending: BTreeMap<&VarId, usize> = BTreeMap::new();
        let mut dependents: BTreeMap<&VarId, Vec<&VarId>> = BTreeMap::new();
        for (id, node) in &self.nodes {
            let inputs: BTreeSet<&VarId> = node.inputs().iter().collect();
            pending.insert(id, inputs.len());
            for input in inputs {
                dependents.entry(input).or_default().push(id);
            }
        }
        let mut ready: BTreeSet<&VarId> = pending
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            order.push(id.clone());
            for dependent in dependents.get(id).into_iter().flatten() {
                let n = pending.get_mut(dependent).expect("declared node");
                *n -= 1;
                if *n == 0 {
                    ready.insert(dependent);
                }
            }
        }
        if order.len() != self.nodes.len() {
            let stuck = pending
                .iter()
                .find(|(id, n)| **n > 0 && !order.contains(id))
                .map(|(id, _)| (*id).clone())
                .expect("some node is left over");
            return Err(DataflowError::Cycle(stuck));
        }
        Ok(order)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, node) in &self.nodes {
            match node {
                NodeSpec::Input(kind) => writeln!(out, "{id} = input {kind}"),
                NodeSpec::Derived { op, inputs } => {
                    let args: Vec<&str> = inputs.iter().map(VarId::as_str).collect();
                    match op {
                        Op::Map(f) | Op::Filter(f) => {
                            writeln!(out, "{id} = {}[{f}]({})", op.name(), args.join(", "))
                        }
                        _ => writeln!(out, "{id} = {}({})", op.name(), args.join(", ")),
                    }
                }
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    /// Parses the text form and validates the result. Lines may appear in any
    /// order; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str, registry: &FnRegistry) -> Result<Self, DataflowError> {
        let mut spec = GraphSpec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| DataflowError::Parse {
                line: index + 1,
                reason: reason.to_owned(),
            };
            let (name, body) = line
                .split_once('=')
                .ok_or_else(|| err("expected `name = ...`"))?;
            let id = VarId::new(name.trim());
            if spec.nodes.contains_key(&id) {
                return Err(DataflowError::DuplicateVar(id));
            }
            let node = parse_body(body.trim()).map_err(err)?;
            spec.nodes.insert(id, node);
        }
        spec.validate(registry)?;
        Ok(spec)
    }
}

fn parse_body(body: &str) -> Result<NodeSpec, &'static str> {
    if let Some(kind) = body.strip_prefix("input ") {
        return kind
            .trim()
            .parse()
            .map(NodeSpec::Input)
            .map_err(|_| "unknown lattice kind");
    }
    let name_end = body.find(['[', '(']).ok_or("expected `(`")?;
    let name = body[..name_end].trim();
    let mut rest = &body[name_end..];
    let mut fn_id = None;
    if rest.starts_with('[') {
        let close = closing_bracket(rest).ok_or("unterminated `[`")?;
        fn_id = Some(rest[1..close].to_owned());
        rest = rest[close + 1..].trim_start();
    }
    let args = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or("expected `(inputs)`")?;
    let inputs: Vec<VarId> = args
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(VarId::new)
        .collect();
    let op = match (name, fn_id) {
        ("map", Some(f)) => Op::Map(f),
        ("filter", Some(p)) => Op::Filter(p),
        ("union", None) => Op::Union,
        ("intersection", None) => Op::Intersection,
        ("product", None) => Op::Product,
        ("fold_sum", None) => Op::FoldSum,
        ("fold_count", None) => Op::FoldCount,
        ("map" | "filter", None) => return Err("map and filter need a `[function]`"),
        _ => return Err("unknown operator"),
    };
    Ok(NodeSpec::Derived { op, inputs })
}

/// Index of the `]` matching the leading `[`, skipping quoted strings.
fn closing_bracket(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GraphSpec {
        let reg = FnRegistry::builtin();
        let mut spec = GraphSpec::new();
        spec.declare("readings".into(), NodeSpec::input(LatticeKind::ORSet), &reg)
            .unwrap();
        spec.declare("other".into(), NodeSpec::input(LatticeKind::ORSet), &reg)
            .unwrap();
        spec.declare(
            "alerts".into(),
            NodeSpec::derived(Op::Filter("second:gt:8.0".into()), &["readings"]),
            &reg,
        )
        .unwrap();
        spec.declare(
            "tagged".into(),
            NodeSpec::derived(Op::Map("pair-with:(\"]\", 1)".into()), &["alerts"]),
            &reg,
        )
        .unwrap();
        spec.declare(
            "both".into(),
            NodeSpec::derived(Op::Product, &["tagged", "other"]),
            &reg,
        )
        .unwrap();
        spec.declare(
            "n".into(),
            NodeSpec::derived(Op::FoldCount, &["both"]),
            &reg,
        )
        .unwrap();
        spec
    }

    #[test]
    fn text_form_round_trips() {
        let spec = sample();
        let text = spec.to_text();
        assert!(text.starts_with("alerts = filter[second:gt:8.0](readings)\n"));
        let back = GraphSpec::from_text(&text, &FnRegistry::builtin()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn topo_order_respects_dependencies() {
        let order = sample().validate(&FnRegistry::builtin()).unwrap();
        let pos = |name: &str| order.iter().position(|v| v.as_str() == name).unwrap();
        assert!(pos("readings") < pos("alerts"));
        assert!(pos("alerts") < pos("tagged"));
        assert!(pos("tagged") < pos("both"));
        assert!(pos("both") < pos("n"));
    }

    #[test]
    fn declare_errors() {
        let reg = FnRegistry::builtin();
        let mut spec = sample();
        assert!(matches!(
            spec.declare(
                "d".into(),
                NodeSpec::derived(Op::Union, &["d", "readings"]),
                &reg
            ),
            Err(DataflowError::Cycle(_))
        ));
        assert!(matches!(
            spec.declare(
                "d".into(),
                NodeSpec::derived(Op::Union, &["missing", "readings"]),
                &reg
            ),
            Err(DataflowError::UnknownVar(_))
        ));
        assert!(matches!(
            spec.declare(
                "d".into(),
                NodeSpec::derived(Op::Union, &["readings"]),
                &reg
            ),
            Err(DataflowError::Arity {
                expected: 2,
                got: 1,
                ..
            })
        ));
        assert!(matches!(
            spec.declare("d".into(), NodeSpec::derived(Op::FoldSum, &["n"]), &reg),
            Err(DataflowError::InputKind { .. })
        ));
        assert!(matches!(
            spec.declare(
                "d".into(),
                NodeSpec::derived(Op::Map("nope".into()), &["readings"]),
                &reg
            ),
            Err(DataflowError::UnknownFn(_))
        ));
        assert!(matches!(
            spec.declare("readings".into(), NodeSpec::input(LatticeKind::GSet), &reg),
            Err(DataflowError::DuplicateVar(_))
        ));
        assert!(matches!(
            spec.declare("bad name".into(), NodeSpec::input(LatticeKind::GSet), &reg),
            Err(DataflowError::InvalidName(_))
        ));
    }

    #[test]
    fn parsed_cycles_are_rejected() {
        let text = "a = map[identity](b)\nb = map[identity](a)\n";
        assert!(matches!(
            GraphSpec::from_text(text, &FnRegistry::builtin()),
            Err(DataflowError::Cycle(_))
        ));
        assert!(matches!(
            GraphSpec::from_text("a = frobnicate(b)", &FnRegistry::builtin()),
            Err(DataflowError::Parse { line: 1, .. })
        ));
    }
}
