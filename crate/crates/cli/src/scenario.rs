//! Named simulation scenarios and their reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use edgeflow_core::sim::{
    self, Counters, EventKind, ScriptedUpdate, SimConfig, SimError, Simulation, TraceRecord,
};
use edgeflow_core::{
    DataflowGraph, Element, FnRegistry, GraphSpec, LatticeKind, LatticeValue, Mutation, NodeSpec,
    Op, ReplicaId, VarId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{FridgeConfig, GossipConfig, ScenarioConfig, ScenarioKind};

pub const READINGS: &str = "readings";
pub const ALERTS: &str = "alerts";
pub const ITEMS: &str = "items";
pub const TALLY: &str = "tally";
pub const BIG: &str = "big";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

/// The element a reading adds to the readings set: `("n<node>", temp)`.
pub fn reading_element(node: ReplicaId, temp_celsius: f64) -> Element {
    Element::pair(Element::str(node.to_string()), Element::Float(temp_celsius))
}

fn is_alert(e: &Element, threshold: f64) -> bool {
    match e {
        Element::Pair(p) => p.1.as_f64().is_some_and(|t| t > threshold),
        _ => false,
    }
}

pub fn fridge_spec(threshold_celsius: f64) -> GraphSpec {
    let registry = FnRegistry::builtin();
    let mut spec = GraphSpec::new();
    spec.declare(
        READINGS.into(),
        NodeSpec::input(LatticeKind::ORSet),
        &registry,
    )
    .expect("valid input");
    spec.declare(
        ALERTS.into(),
        NodeSpec::derived(
            Op::Filter(format!("second:gt:{threshold_celsius:?}")),
            &[READINGS],
        ),
        &registry,
    )
    .expect("valid filter");
    spec
}

pub fn fridge_script(fridge: &FridgeConfig) -> Vec<ScriptedUpdate> {
    fridge
        .readings
        .iter()
        .map(|r| ScriptedUpdate {
            round: r.round,
            node: ReplicaId(r.node),
            var: READINGS.into(),
            mutation: Mutation::Add(reading_element(ReplicaId(r.node), r.temp_celsius)),
        })
        .collect()
}

pub fn gossip_spec() -> GraphSpec {
    let registry = FnRegistry::builtin();
    let mut spec = GraphSpec::new();
    spec.declare(ITEMS.into(), NodeSpec::input(LatticeKind::ORSet), &registry)
        .expect("valid input");
    spec.declare(
        TALLY.into(),
        NodeSpec::input(LatticeKind::PNCounter),
        &registry,
    )
    .expect("valid input");
    spec.declare(
        BIG.into(),
        NodeSpec::derived(Op::Filter("gt:10".into()), &[ITEMS]),
        &registry,
    )
    .expect("valid filter");
    spec
}

/// Random adds and counter updates drawn from their own stream of `seed`,
/// ordered by round.
pub fn gossip_script(gossip: &GossipConfig, nodes: usize, seed: u64) -> Vec<ScriptedUpdate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut script: Vec<ScriptedUpdate> = (0..gossip.updates)
        .map(|_| {
            let round = rng.gen_range(0..gossip.update_rounds);
            let node = ReplicaId(rng.gen_range(0..nodes as u32));
            let (var, mutation) = if rng.gen_bool(0.5) {
                (ITEMS, Mutation::Add(Element::Int(rng.gen_range(0..20))))
            } else if rng.gen_bool(0.7) {
                (TALLY, Mutation::Increment(rng.gen_range(1..=3)))
            } else {
                (TALLY, Mutation::Decrement(1))
            };
            ScriptedUpdate {
                round,
                node,
                var: var.into(),
                mutation,
            }
        })
        .collect();
    script.sort_by_key(|u| u.round);
    script
}

/// Join of every node's inputs after replaying only its own updates, in the
/// order the simulator applies them, with no communication.
pub fn isolated_join(
    spec: &GraphSpec,
    nodes: usize,
    script: &[ScriptedUpdate],
) -> BTreeMap<VarId, LatticeValue> {
    let template = DataflowGraph::from_spec(spec, FnRegistry::builtin()).expect("valid spec");
    let mut joined = template.input_store();
    for n in 0..nodes as u32 {
        let mut g = template.clone();
        let mut own: Vec<&ScriptedUpdate> =
            script.iter().filter(|u| u.node == ReplicaId(n)).collect();
        own.sort_by_key(|u| u.round);
        for u in own {
            g.update(&u.var, u.node, &u.mutation).expect("valid update");
        }
        for (var, value) in g.input_store() {
            let slot = joined.get_mut(&var).expect("same inputs");
            *slot = slot.join(&value).expect("same kinds");
        }
    }
    joined
}

pub fn sim_config(config: &ScenarioConfig) -> SimConfig {
    let (spec, script, watch) = match config.scenario {
        ScenarioKind::Fridge => {
            let fridge = config.fridge.as_ref().expect("validated config");
            (
                fridge_spec(fridge.threshold_celsius),
                fridge_script(fridge),
                Some(ALERTS.into()),
            )
        }
        ScenarioKind::Gossip => {
            let gossip = config.gossip.as_ref().expect("validated config");
            (
                gossip_spec(),
                gossip_script(gossip, config.nodes, config.seed),
                None,
            )
        }
    };
    let mut sim = SimConfig::new(config.nodes, spec);
    sim.fanout = config.fanout;
    sim.seed = config.seed;
    sim.network = config.network();
    sim.script = script;
    sim.watch = watch;
    sim
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlertSnapshot {
    /// The round at whose end the sets were observed.
    pub round: u64,
    pub alerts: BTreeMap<ReplicaId, Vec<Element>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReadingLatency {
    pub round: u64,
    pub node: ReplicaId,
    pub temp_celsius: f64,
    /// Rounds until the reading node's own alerts held the reading.
    pub latency: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FridgeReport {
    pub threshold_celsius: f64,
    /// Alert sets of every node, recorded at the end of each round in which
    /// any of them changed.
    pub timeline: Vec<AlertSnapshot>,
    /// One entry per over-threshold reading.
    pub local_alert_latency: Vec<ReadingLatency>,
    pub max_local_latency: Option<u64>,
    /// Every over-threshold reading, as filtered from all readings.
    pub expected_alerts: Vec<Element>,
    /// First round from whose end on every node's alerts equal the expected
    /// set.
    pub alert_convergence_round: Option<u64>,
    pub final_alerts: BTreeMap<ReplicaId, Vec<Element>>,
    pub inconsistencies: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GossipReport {
    pub updates: Vec<ScriptedUpdate>,
    pub oracle: BTreeMap<VarId, LatticeValue>,
    pub oracle_match: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub nodes: usize,
    pub converged: bool,
    pub rounds: u64,
    pub convergence_round: Option<u64>,
    #[serde(flatten)]
    pub counters: Counters,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fridge: Option<FridgeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gossip: Option<GossipReport>,
    pub final_stores: BTreeMap<ReplicaId, BTreeMap<VarId, LatticeValue>>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

fn alert_sets(sim: &Simulation) -> BTreeMap<ReplicaId, BTreeSet<Element>> {
    let alerts = VarId::from(ALERTS);
    sim.nodes()
        .iter()
        .map(|n| {
            let set = n
                .graph
                .read(&alerts)
                .ok()
                .and_then(LatticeValue::as_orset)
                .map(|s| s.elements())
                .unwrap_or_default();
            (n.id, set)
        })
        .collect()
}

fn readings_of(sim: &Simulation, node: ReplicaId) -> BTreeSet<Element> {
    sim.node(node)
        .graph
        .read(&READINGS.into())
        .ok()
        .and_then(LatticeValue::as_orset)
        .map(|s| s.elements())
        .unwrap_or_default()
}

fn listed(sets: &BTreeMap<ReplicaId, BTreeSet<Element>>) -> BTreeMap<ReplicaId, Vec<Element>> {
    sets.iter()
        .map(|(k, v)| (*k, v.iter().cloned().collect()))
        .collect()
}

/// Runs the scenario described by `config` to convergence or `max_rounds`.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    let sim_cfg = sim_config(config);
    let script = sim_cfg.script.clone();
    let spec = sim_cfg.spec.clone();
    let mut sim = Simulation::new(sim_cfg)?;
    let threshold = config.fridge.as_ref().map(|f| f.threshold_celsius);

    let mut history: Vec<(u64, BTreeMap<ReplicaId, BTreeSet<Element>>)> = Vec::new();
    let mut inconsistencies = Vec::new();
    let report = sim.run_observed(config.max_rounds, |s| {
        let Some(threshold) = threshold else { return };
        let round = s.round() - 1;
        let sets = alert_sets(s);
        for (node, alerts) in &sets {
            let expected: BTreeSet<Element> = readings_of(s, *node)
                .into_iter()
                .filter(|e| is_alert(e, threshold))
                .collect();
            if *alerts != expected {
                inconsistencies.push(format!(
                    "round {round}: {node} alerts differ from its filtered readings"
                ));
            }
        }
        history.push((round, sets));
    })?;

    let fridge = config
        .fridge
        .as_ref()
        .map(|fridge| fridge_report(fridge, &sim, &report.trace, history, inconsistencies));
    let gossip = config.gossip.as_ref().map(|_| {
        let oracle = isolated_join(&spec, config.nodes, &script);
        let oracle_match = sim.input_stores().values().all(|store| *store == oracle);
        GossipReport {
            updates: script.clone(),
            oracle,
            oracle_match,
        }
    });

    Ok(ScenarioReport {
        scenario: config.scenario,
        seed: config.seed,
        nodes: config.nodes,
        converged: report.converged,
        rounds: report.rounds,
        convergence_round: report.convergence_round,
        counters: report.counters,
        fridge,
        gossip,
        final_stores: report.final_stores,
        trace: report.trace,
    })
}

fn fridge_report(
    fridge: &FridgeConfig,
    sim: &Simulation,
    trace: &[TraceRecord],
    history: Vec<(u64, BTreeMap<ReplicaId, BTreeSet<Element>>)>,
    mut inconsistencies: Vec<String>,
) -> FridgeReport {
    let threshold = fridge.threshold_celsius;
    let mut first_alert: BTreeMap<(ReplicaId, Element), u64> = BTreeMap::new();
    for record in trace.iter().filter(|r| r.event == EventKind::Alert) {
        if let Ok(element) = serde_json::from_value::<Element>(record.payload["element"].clone()) {
            first_alert
                .entry((record.node, element))
                .or_insert(record.round);
        }
    }

    let local_alert_latency: Vec<ReadingLatency> = fridge
        .readings
        .iter()
        .filter(|r| r.temp_celsius > threshold)
        .map(|r| {
            let node = ReplicaId(r.node);
            let element = reading_element(node, r.temp_celsius);
            ReadingLatency {
                round: r.round,
                node,
                temp_celsius: r.temp_celsius,
                latency: first_alert
                    .get(&(node, element))
                    .map(|first| first.saturating_sub(r.round)),
            }
        })
        .collect();
    let max_local_latency = if local_alert_latency.iter().all(|l| l.latency.is_some()) {
        Some(
            local_alert_latency
                .iter()
                .filter_map(|l| l.latency)
                .max()
                .unwrap_or(0),
        )
    } else {
        None
    };

    let expected: BTreeSet<Element> = fridge
        .readings
        .iter()
        .map(|r| reading_element(ReplicaId(r.node), r.temp_celsius))
        .filter(|e| is_alert(e, threshold))
        .collect();

    let final_sets = alert_sets(sim);
    for (node, alerts) in &final_sets {
        for e in alerts {
            if !first_alert.contains_key(&(*node, e.clone())) {
                inconsistencies.push(format!("{node} holds alert {e} with no alert event"));
            }
        }
    }

    let matches =
        |sets: &BTreeMap<ReplicaId, BTreeSet<Element>>| sets.values().all(|s| *s == expected);
    let alert_convergence_round = if history.is_empty() {
        matches(&final_sets).then_some(0)
    } else {
        let trailing = history
            .iter()
            .rev()
            .take_while(|(_, sets)| matches(sets))
            .count();
        (trailing > 0).then(|| history[history.len() - trailing].0)
    };

    let mut timeline = Vec::new();
    let mut previous: Option<&BTreeMap<ReplicaId, BTreeSet<Element>>> = None;
    for (round, sets) in &history {
        let changed = match previous {
            Some(p) => p != sets,
            None => sets.values().any(|s| !s.is_empty()),
        };
        if changed {
            timeline.push(AlertSnapshot {
                round: *round,
                alerts: listed(sets),
            });
        }
        previous = Some(sets);
    }

    FridgeReport {
        threshold_celsius: threshold,
        timeline,
        local_alert_latency,
        max_local_latency,
        expected_alerts: expected.into_iter().collect(),
        alert_convergence_round,
        final_alerts: listed(&final_sets),
        inconsistencies,
    }
}

impl ScenarioReport {
    /// Property violations the run exhibited. Failing to converge within
    /// `max_rounds` is reported but is not a violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(f) = &self.fridge {
            for l in &f.local_alert_latency {
                if l.latency != Some(0) {
                    out.push(format!(
                        "reading {} at {} round {} was not alerted locally in the same round",
                        l.temp_celsius, l.node, l.round
                    ));
                }
            }
            out.extend(f.inconsistencies.iter().cloned());
            if self.converged && f.alert_convergence_round.is_none() {
                out.push("converged but alert sets differ from the filtered readings".into());
            }
        }
        if let Some(g) = &self.gossip {
            if self.converged && !g.oracle_match {
                out.push("converged but input stores differ from the oracle join".into());
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Structured => {
                let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
                s.push('\n');
                s
            }
            Format::Text => self.render_text(),
        }
    }

    pub fn render_trace(&self, format: Format) -> String {
        sim::trace::render(&self.trace, format == Format::Structured)
    }

    fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario.name());
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "nodes: {}", self.nodes);
        match self.convergence_round {
            Some(r) => {
                let _ = writeln!(s, "converged: yes, at round {r}");
            }
            None => {
                let _ = writeln!(s, "converged: no, stopped after {} rounds", self.rounds);
            }
        }
        let c = &self.counters;
        let _ = writeln!(
            s,
            "messages: sent {} dropped {} duplicated {} delivered {}",
            c.messages_sent, c.dropped, c.duplicated, c.delivered
        );
        if let Some(f) = &self.fridge {
            let _ = writeln!(s, "threshold: {:?} C", f.threshold_celsius);
            for l in &f.local_alert_latency {
                let latency = l.latency.map_or("never".to_string(), |n| n.to_string());
                let _ = writeln!(
                    s,
                    "reading {:?} C at {} round {}: local alert latency {latency}",
                    l.temp_celsius, l.node, l.round
                );
            }
            for snap in &f.timeline {
                let _ = writeln!(s, "alerts after round {}:", snap.round);
                for (node, alerts) in &snap.alerts {
                    let _ = writeln!(s, "  {node}: {}", show_set(alerts));
                }
            }
            let round = f
                .alert_convergence_round
                .map_or("never".to_string(), |r| r.to_string());
            let _ = writeln!(s, "alert sets settled at round: {round}");
            for (node, alerts) in &f.final_alerts {
                let _ = writeln!(s, "final alerts {node}: {}", show_set(alerts));
            }
        }
        if let Some(g) = &self.gossip {
            let _ = writeln!(s, "scripted updates: {}", g.updates.len());
            let _ = writeln!(
                s,
                "oracle match: {}",
                if g.oracle_match { "yes" } else { "no" }
            );
        }
        for v in self.violations() {
            let _ = writeln!(s, "violation: {v}");
        }
        s
    }
}

fn show_set(elements: &[Element]) -> String {
    let items: Vec<String> = elements.iter().map(Element::to_string).collect();
    format!("{{{}}}", items.join(", "))
}
