//! Deterministic round-based gossip simulator.
//!
//! Every node runs the same [`GraphSpec`] and owns its own input history.
//! Each round:
//!
//! 1. envelopes due this round are delivered in `(dst, src, enqueue index)`
//!    order and joined into the receiver's inputs (a delivered push triggers a
//!    pull reply carrying the receiver's state);
//! 2. scripted updates for the round are applied at their owning node;
//! 3. every alive node pushes its input states to `fanout` distinct random
//!    peers;
//! 4. the network drops, duplicates and delays each envelope by at least one
//!    round, and discards those crossing an active partition;
//! 5. the round counter advances.
//!
//! Every event traced with round `r` has taken effect once round `r` ends.
//!
//! All randomness comes from one ChaCha generator seeded from the config, so a
//! `(config, seed)` pair fully determines the run, trace included.

mod network;
pub mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use network::{NetworkModel, Partition};
pub use trace::{EventKind, TraceRecord};

use crate::dataflow::{DataflowError, DataflowGraph, FnRegistry, GraphSpec, VarId};
use crate::element::Element;
use crate::lattice::{LatticeValue, Mutation};
use crate::replica::ReplicaId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("node {node}: {source}")]
    Dataflow {
        node: ReplicaId,
        #[source]
        source: DataflowError,
    },
}

/// A local mutation scheduled for a given round at a given node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedUpdate {
    pub round: u64,
    pub node: ReplicaId,
    pub var: VarId,
    pub mutation: Mutation,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub nodes: usize,
    pub fanout: usize,
    pub seed: u64,
    pub network: NetworkModel,
    pub spec: GraphSpec,
    pub registry: FnRegistry,
    pub script: Vec<ScriptedUpdate>,
    /// Derived set variable whose newly appearing elements are traced as
    /// `alert` events.
    pub watch: Option<VarId>,
}

impl SimConfig {
    pub fn new(nodes: usize, spec: GraphSpec) -> Self {
        SimConfig {
            nodes,
            fanout: 1,
            seed: 0,
            network: NetworkModel::lossless(),
            spec,
            registry: FnRegistry::builtin(),
            script: Vec::new(),
            watch: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.nodes == 0 {
            return Err(SimError::Config("at least one node is required".into()));
        }
        if self.nodes > u32::MAX as usize {
            return Err(SimError::Config("too many nodes".into()));
        }
        if self.fanout == 0 {
            return Err(SimError::Config("fanout must be at least 1".into()));
        }
        self.network.validate(self.nodes)?;
        self.spec
            .validate(&self.registry)
            .map_err(|e| SimError::Config(e.to_string()))?;
        for update in &self.script {
            if update.node.index() >= self.nodes {
                return Err(SimError::Config(format!(
                    "update scheduled on nonexistent node {}",
                    update.node
                )));
            }
            if !self.spec.is_input(&update.var) {
                return Err(SimError::Config(format!(
                    "update targets `{}`, which is not an input variable",
                    update.var
                )));
            }
        }
        if let Some(watch) = &self.watch {
            match self.spec.get(watch) {
                Some(node) if node.kind() == crate::lattice::LatticeKind::ORSet => {}
                _ => {
                    return Err(SimError::Config(format!(
                        "watched variable `{watch}` must be a set variable"
                    )))
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Push,
    Pull,
}

/// A full-state gossip message carrying the sender's input variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageEnvelope {
    pub id: u64,
    pub src: ReplicaId,
    pub dst: ReplicaId,
    pub kind: EnvelopeKind,
    pub sent_round: u64,
    pub deliver_at_round: u64,
    pub payload: Arc<BTreeMap<VarId, LatticeValue>>,
}

#[derive(Clone, Debug)]
pub struct SimNode {
    pub id: ReplicaId,
    pub graph: DataflowGraph,
    pub alive: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub messages_sent: u64,
    pub dropped: u64,
    pub duplicated: u64,
    pub delivered: u64,
}

/// Outcome of [`Simulation::run`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub converged: bool,
    /// Rounds executed.
    pub rounds: u64,
    pub convergence_round: Option<u64>,
    #[serde(flatten)]
    pub counters: Counters,
    pub final_stores: BTreeMap<ReplicaId, BTreeMap<VarId, LatticeValue>>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

pub struct Simulation {
    config: SimConfig,
    round: u64,
    nodes: Vec<SimNode>,
    in_flight: Vec<MessageEnvelope>,
    next_envelope: u64,
    rng: ChaCha8Rng,
    counters: Counters,
    trace: Vec<TraceRecord>,
    delivered_log: Vec<MessageEnvelope>,
    alerted: Vec<BTreeSet<Element>>,
    last_script_round: Option<u64>,
}

impl Simulation {
    /// Builds the initial world: every node at bottom inputs, round 0.
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let template =
            DataflowGraph::from_spec(&config.spec, config.registry.clone()).map_err(|source| {
                SimError::Dataflow {
                    node: ReplicaId(0),
                    source,
                }
            })?;
        let nodes = (0..config.nodes)
            .map(|i| SimNode {
                id: ReplicaId(i as u32),
                graph: template.clone(),
                alive: true,
            })
            .collect();
        let last_script_round = config.script.iter().map(|u| u.round).max();
        Ok(Simulation {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            alerted: vec![BTreeSet::new(); config.nodes],
            config,
            round: 0,
            nodes,
            in_flight: Vec::new(),
            next_envelope: 0,
            counters: Counters::default(),
            trace: Vec::new(),
            delivered_log: Vec::new(),
            last_script_round,
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[SimNode] {
        &self.nodes
    }

    pub fn node(&self, id: ReplicaId) -> &SimNode {
        &self.nodes[id.index()]
    }

    pub fn in_flight(&self) -> &[MessageEnvelope] {
        &self.in_flight
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Every envelope that was applied to a receiver, in delivery order.
    pub fn delivered_log(&self) -> &[MessageEnvelope] {
        &self.delivered_log
    }

    pub fn set_alive(&mut self, node: ReplicaId, alive: bool) {
        self.nodes[node.index()].alive = alive;
    }

    /// Whether scripted updates remain for this or later rounds.
    pub fn script_pending(&self) -> bool {
        self.last_script_round
            .is_some_and(|last| last >= self.round)
    }

    /// Advances one round.
    pub fn step(&mut self) -> Result<(), SimError> {
        let now = self.round;
        let (mut due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.in_flight)
            .into_iter()
            .partition(|e| e.deliver_at_round == now);
        self.in_flight = rest;
        due.sort_by_key(|e| (e.dst, e.src, e.id));
        for envelope in due {
            self.deliver(envelope, now)?;
        }

        self.apply_script(now)?;

        for i in 0..self.nodes.len() {
            if !self.nodes[i].alive || self.nodes.len() < 2 {
                continue;
            }
            let src = self.nodes[i].id;
            let peers = self.nodes.len() - 1;
            let picks = index::sample(&mut self.rng, peers, self.config.fanout.min(peers));
            let mut targets: Vec<usize> = picks
                .into_iter()
                .map(|p| if p >= i { p + 1 } else { p })
                .collect();
            targets.sort_unstable();
            for t in targets {
                self.send(src, ReplicaId(t as u32), EnvelopeKind::Push, now);
            }
        }

        self.round = now + 1;
        Ok(())
    }

    fn apply_script(&mut self, now: u64) -> Result<(), SimError> {
        let due: Vec<ScriptedUpdate> = self
            .config
            .script
            .iter()
            .filter(|u| u.round == now)
            .cloned()
            .collect();
        for update in due {
            let node = update.node;
            if !self.nodes[node.index()].alive {
                continue;
            }
            self.nodes[node.index()]
                .graph
                .update(&update.var, node, &update.mutation)
                .map_err(|source| SimError::Dataflow { node, source })?;
            self.record(
                now,
                node,
                EventKind::Update,
                json!({"var": update.var, "mutation": update.mutation.to_string()}),
            );
            self.check_alerts(node, now);
        }
        Ok(())
    }

    fn send(&mut self, src: ReplicaId, dst: ReplicaId, kind: EnvelopeKind, now: u64) {
        self.counters.messages_sent += 1;
        if self.config.network.partitioned(src, dst, now) {
            self.counters.dropped += 1;
            self.record(
                now,
                src,
                EventKind::Drop,
                json!({"to": dst, "kind": kind, "reason": "partition"}),
            );
            return;
        }
        if self.rng.gen::<f64>() < self.config.network.drop_prob {
            self.counters.dropped += 1;
            self.record(
                now,
                src,
                EventKind::Drop,
                json!({"to": dst, "kind": kind, "reason": "loss"}),
            );
            return;
        }
        let copies = if self.rng.gen::<f64>() < self.config.network.dup_prob {
            self.counters.duplicated += 1;
            self.record(now, src, EventKind::Dup, json!({"to": dst, "kind": kind}));
            2
        } else {
            1
        };
        let payload = Arc::new(self.nodes[src.index()].graph.input_store());
        for _ in 0..copies {
            let delay = 1 + self.rng.gen_range(0..=self.config.network.max_delay_rounds);
            let envelope = MessageEnvelope {
                id: self.next_envelope,
                src,
                dst,
                kind,
                sent_round: now,
                deliver_at_round: now + delay,
                payload: Arc::clone(&payload),
            };
            self.next_envelope += 1;
            self.record(
                now,
                src,
                EventKind::Send,
                json!({"to": dst, "kind": kind, "id": envelope.id, "deliver_at": envelope.deliver_at_round}),
            );
            self.in_flight.push(envelope);
        }
    }

    fn deliver(&mut self, envelope: MessageEnvelope, now: u64) -> Result<(), SimError> {
        let dst = envelope.dst;
        if !self.nodes[dst.index()].alive {
            return Ok(());
        }
        if self.config.network.partitioned(envelope.src, dst, now) {
            self.counters.dropped += 1;
            self.record(
                now,
                dst,
                EventKind::Drop,
                json!({"from": envelope.src, "id": envelope.id, "reason": "partition"}),
            );
            return Ok(());
        }
        let changed = self.apply_envelope(&envelope)?;
        self.counters.delivered += 1;
        self.record(
            now,
            dst,
            EventKind::Deliver,
            json!({"from": envelope.src, "kind": envelope.kind, "id": envelope.id, "changed": changed}),
        );
        self.check_alerts(dst, now);
        if envelope.kind == EnvelopeKind::Push {
            self.send(dst, envelope.src, EnvelopeKind::Pull, now);
        }
        self.delivered_log.push(envelope);
        Ok(())
    }

    /// Joins an envelope's payload into its receiver. Returns whether any
    /// input changed. Does not trace, count or reply.
    pub fn apply_envelope(&mut self, envelope: &MessageEnvelope) -> Result<bool, SimError> {
        let dst = envelope.dst;
        let graph = &mut self.nodes[dst.index()].graph;
        let mut changed = false;
        for (var, value) in envelope.payload.iter() {
            changed |= graph
                .merge_var(var, value)
                .map_err(|source| SimError::Dataflow { node: dst, source })?;
        }
        Ok(changed)
    }

    fn check_alerts(&mut self, node: ReplicaId, now: u64) {
        let Some(watch) = self.config.watch.clone() else {
            return;
        };
        let current = self.nodes[node.index()]
            .graph
            .read(&watch)
            .ok()
            .and_then(LatticeValue::as_orset)
            .map(|s| s.elements())
            .unwrap_or_default();
        let fresh: Vec<Element> = current
            .difference(&self.alerted[node.index()])
            .cloned()
            .collect();
        for element in fresh {
            self.record(
                now,
                node,
                EventKind::Alert,
                json!({"var": watch, "element": element}),
            );
        }
        self.alerted[node.index()] = current;
    }

    fn record(
        &mut self,
        round: u64,
        node: ReplicaId,
        event: EventKind,
        payload: serde_json::Value,
    ) {
        self.trace.push(TraceRecord {
            round,
            node,
            event,
            payload,
        });
    }

    /// All alive nodes hold identical stores and no in-flight envelope could
    /// change any of them.
    pub fn converged(&self) -> bool {
        let mut alive = self.nodes.iter().filter(|n| n.alive);
        let Some(first) = alive.next() else {
            return true;
        };
        if !alive.all(|n| n.graph.store() == first.graph.store()) {
            return false;
        }
        self.in_flight.iter().all(|e| {
            let node = &self.nodes[e.dst.index()];
            !node.alive
                || e.payload
                    .iter()
                    .all(|(var, value)| !node.graph.would_change(var, value).unwrap_or(true))
        })
    }

    /// Steps until every scripted update has been applied and the nodes have
    /// converged, or until `max_rounds` rounds have run.
    pub fn run(&mut self, max_rounds: u64) -> Result<Report, SimError> {
        self.run_observed(max_rounds, |_| {})
    }

    /// Like [`Simulation::run`], calling `observe` after every round.
    pub fn run_observed(
        &mut self,
        max_rounds: u64,
        mut observe: impl FnMut(&Simulation),
    ) -> Result<Report, SimError> {
        let mut convergence_round = None;
        loop {
            if !self.script_pending() && self.converged() {
                convergence_round = Some(self.round);
                self.record(self.round, ReplicaId(0), EventKind::Converge, json!({}));
                break;
            }
            if self.round >= max_rounds {
                break;
            }
            self.step()?;
            observe(self);
        }
        Ok(self.report(convergence_round))
    }

    fn report(&self, convergence_round: Option<u64>) -> Report {
        Report {
            converged: convergence_round.is_some(),
            rounds: self.round,
            convergence_round,
            counters: self.counters.clone(),
            final_stores: self
                .nodes
                .iter()
                .map(|n| (n.id, n.graph.store().clone()))
                .collect(),
            trace: self.trace.clone(),
        }
    }

    /// Input stores of every node, keyed by node.
    pub fn input_stores(&self) -> BTreeMap<ReplicaId, BTreeMap<VarId, LatticeValue>> {
        self.nodes
            .iter()
            .map(|n| (n.id, n.graph.input_store()))
            .collect()
    }
}
