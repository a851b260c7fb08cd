use std::collections::{BTreeMap, BTreeSet};

use super::ops::{self, FoldKind};
use super::registry::{ElementFn, Predicate};
use super::{DataflowError, FnRegistry, GraphSpec, NodeSpec, Op, VarId};
use crate::lattice::{LatticeValue, Mutation};
use crate::replica::ReplicaId;

#[derive(Clone, Debug)]
enum Compiled {
    Map(ElementFn),
    Filter(Predicate),
    Union,
    Intersection,
    Product,
    Fold(FoldKind),
}

/// A dataflow graph instance: a spec plus the current value of every variable.
///
/// Updates and merges recompute the affected derived variables immediately,
/// so after any public call every derived value equals a recomputation from
/// the current inputs.
#[derive(Clone, Debug)]
pub struct DataflowGraph {
    spec: GraphSpec,
    registry: FnRegistry,
    order: Vec<VarId>,
    compiled: BTreeMap<VarId, (Compiled, Vec<VarId>)>,
    store: BTreeMap<VarId, LatticeValue>,
}

impl Default for DataflowGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl DataflowGraph {
    pub fn new() -> Self {
        Self::with_registry(FnRegistry::builtin())
    }

    pub fn with_registry(registry: FnRegistry) -> Self {
        DataflowGraph {
            spec: GraphSpec::new(),
            registry,
            order: Vec::new(),
            compiled: BTreeMap::new(),
            store: BTreeMap::new(),
        }
    }

    /// Instantiates a spec with every input at bottom.
    pub fn from_spec(spec: &GraphSpec, registry: FnRegistry) -> Result<Self, DataflowError> {
        let order = spec.validate(&registry)?;
        let mut graph = DataflowGraph::with_registry(registry);
        for id in order {
            let node = spec
                .get(&id)
                .expect("ordered ids come from the spec")
                .clone();
            graph.install(id, node)?;
        }
        graph.spec = spec.clone();
        graph.propagate()?;
        Ok(graph)
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn declare(&mut self, id: impl Into<VarId>, node: NodeSpec) -> Result<(), DataflowError> {
        let id = id.into();
        self.spec
            .declare(id.clone(), node.clone(), &self.registry)?;
        self.install(id.clone(), node)?;
        self.recompute(&id)?;
        Ok(())
    }

    fn install(&mut self, id: VarId, node: NodeSpec) -> Result<(), DataflowError> {
        match node {
            NodeSpec::Input(kind) => {
                self.store.insert(id.clone(), LatticeValue::bottom(kind));
            }
            NodeSpec::Derived { op, inputs } => {
                let compiled = match &op {
                    Op::Map(f) => Compiled::Map(self.registry.resolve_fn(f)?),
                    Op::Filter(p) => Compiled::Filter(self.registry.resolve_predicate(p)?),
                    Op::Union => Compiled::Union,
                    Op::Intersection => Compiled::Intersection,
                    Op::Product => Compiled::Product,
                    Op::FoldSum => Compiled::Fold(FoldKind::Sum),
                    Op::FoldCount => Compiled::Fold(FoldKind::Count),
                };
                self.compiled.insert(id.clone(), (compiled, inputs));
                self.store
                    .insert(id.clone(), LatticeValue::bottom(op.output_kind()));
            }
        }
        self.order.push(id);
        Ok(())
    }

    pub fn read(&self, id: &VarId) -> Result<&LatticeValue, DataflowError> {
        self.store
            .get(id)
            .ok_or_else(|| DataflowError::UnknownVar(id.clone()))
    }

    pub fn store(&self) -> &BTreeMap<VarId, LatticeValue> {
        &self.store
    }

    /// Current values of the input variables only.
    pub fn input_store(&self) -> BTreeMap<VarId, LatticeValue> {
        self.spec
            .inputs()
            .map(|(id, _)| (id.clone(), self.store[id].clone()))
            .collect()
    }

    /// Applies a local mutation to an input and refreshes its dependents.
    pub fn update(
        &mut self,
        id: &VarId,
        replica: ReplicaId,
        mutation: &Mutation,
    ) -> Result<(), DataflowError> {
        let current = self.input_value(id)?;
        let next = current.apply(replica, mutation)?;
        self.set_input(id, next)
    }

    /// Joins remote state into a local input. Returns whether the input
    /// changed.
    pub fn merge_var(&mut self, id: &VarId, remote: &LatticeValue) -> Result<bool, DataflowError> {
        let current = self.input_value(id)?;
        let joined = current.join(remote)?;
        if joined == *current {
            return Ok(false);
        }
        self.set_input(id, joined)?;
        Ok(true)
    }

    /// Whether joining `remote` into input `id` would change it.
    pub fn would_change(&self, id: &VarId, remote: &LatticeValue) -> Result<bool, DataflowError> {
        Ok(!remote.leq(self.input_value(id)?)?)
    }

    fn input_value(&self, id: &VarId) -> Result<&LatticeValue, DataflowError> {
        match self.spec.get(id) {
            None => Err(DataflowError::UnknownVar(id.clone())),
            Some(NodeSpec::Derived { .. }) => Err(DataflowError::NotAnInput(id.clone())),
            Some(NodeSpec::Input(_)) => Ok(&self.store[id]),
        }
    }

    fn set_input(&mut self, id: &VarId, value: LatticeValue) -> Result<(), DataflowError> {
        self.store.insert(id.clone(), value);
        self.refresh_from(BTreeSet::from([id.clone()]))
    }

    /// Recomputes every derived variable in topological order.
    pub fn propagate(&mut self) -> Result<(), DataflowError> {
        for id in self.order.clone() {
            if self.compiled.contains_key(&id) {
                self.recompute(&id)?;
            }
        }
        Ok(())
    }

    /// Recomputes only variables downstream of `changed`.
    fn refresh_from(&mut self, mut changed: BTreeSet<VarId>) -> Result<(), DataflowError> {
        for id in self.order.clone() {
            let Some((_, inputs)) = self.compiled.get(&id) else {
                continue;
            };
            if inputs.iter().any(|i| changed.contains(i)) && self.recompute(&id)? {
                changed.insert(id);
            }
        }
        Ok(())
    }

    /// Evaluates one derived variable from its inputs; returns whether the
    /// stored value changed.
    fn recompute(&mut self, id: &VarId) -> Result<bool, DataflowError> {
        let Some((compiled, inputs)) = self.compiled.get(id) else {
            return Ok(false);
        };
        let set = |i: usize| {
            self.store[&inputs[i]]
                .as_orset()
                .expect("operator inputs are checked to be sets")
        };
        let value: LatticeValue = match compiled {
            Compiled::Map(f) => ops::map(set(0), f).into(),
            Compiled::Filter(p) => ops::filter(set(0), p).into(),
            Compiled::Union => ops::union(set(0), set(1)).into(),
            Compiled::Intersection => ops::intersection(set(0), set(1)).into(),
            Compiled::Product => ops::product(set(0), set(1)).into(),
            Compiled::Fold(kind) => ops::fold(set(0), *kind)?.into(),
        };
        let changed = self.store.get(id) != Some(&value);
        self.store.insert(id.clone(), value);
        Ok(changed)
    }
}
