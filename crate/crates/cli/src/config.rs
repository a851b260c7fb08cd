//! Scenario configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! scenario = "fridge"        # or "gossip"
//! nodes = 4
//! seed = 7
//! drop_prob = 0.1
//! dup_prob = 0.05
//! max_delay_rounds = 1
//! fanout = 2
//! max_rounds = 40
//!
//! [[partitions]]             # optional, repeatable
//! from_round = 2             # inclusive
//! to_round = 6               # exclusive: healed from this round on
//! nodes = [2]                # one side of the split
//!
//! [fridge]                   # required when scenario = "fridge"
//! threshold_celsius = 8.0
//! readings = [{ round = 3, node = 2, temp_celsius = 9.5 }]
//!
//! [gossip]                   # required when scenario = "gossip"
//! updates = 20               # generated from the seed
//! update_rounds = 5          # updates land in rounds 0..update_rounds
//! ```
//!
//! Unknown keys are rejected. Nodes are numbered from 0.

use std::path::Path;
use std::str::FromStr;

use edgeflow_core::sim::{NetworkModel, Partition};
use edgeflow_core::ReplicaId;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Fridge,
    Gossip,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fridge => "fridge",
            ScenarioKind::Gossip => "gossip",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub from_round: u64,
    pub to_round: u64,
    pub nodes: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reading {
    pub round: u64,
    pub node: u32,
    pub temp_celsius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FridgeConfig {
    pub threshold_celsius: f64,
    #[serde(default)]
    pub readings: Vec<Reading>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GossipConfig {
    pub updates: usize,
    #[serde(default = "default_update_rounds")]
    pub update_rounds: u64,
}

fn default_update_rounds() -> u64 {
    1
}

fn default_fanout() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub nodes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub drop_prob: f64,
    #[serde(default)]
    pub dup_prob: f64,
    #[serde(default)]
    pub max_delay_rounds: u64,
    #[serde(default = "default_fanout")]
    pub fanout: usize,
    pub max_rounds: u64,
    #[serde(default)]
    pub partitions: Vec<PartitionConfig>,
    pub fridge: Option<FridgeConfig>,
    pub gossip: Option<GossipConfig>,
}

impl FromStr for ScenarioConfig {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        text.parse().map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.nodes == 0 {
            return Err("nodes must be at least 1".into());
        }
        if self.nodes > u32::MAX as usize {
            return Err("too many nodes".into());
        }
        if self.fanout == 0 {
            return Err("fanout must be at least 1".into());
        }
        if self.max_rounds == 0 {
            return Err("max_rounds must be at least 1".into());
        }
        for (name, p) in [("drop_prob", self.drop_prob), ("dup_prob", self.dup_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be within [0, 1], got {p}"));
            }
        }
        let node_ok = |n: u32| (n as usize) < self.nodes;
        for p in &self.partitions {
            if p.from_round > p.to_round {
                return Err(format!(
                    "partition {}..{} is reversed",
                    p.from_round, p.to_round
                ));
            }
            if p.to_round > self.max_rounds {
                return Err(format!(
                    "partition ends at round {} past max_rounds",
                    p.to_round
                ));
            }
            if let Some(bad) = p.nodes.iter().find(|n| !node_ok(**n)) {
                return Err(format!("partition names nonexistent node {bad}"));
            }
        }
        match self.scenario {
            ScenarioKind::Fridge => {
                let fridge = self
                    .fridge
                    .as_ref()
                    .ok_or("scenario `fridge` needs a [fridge] table")?;
                if !fridge.threshold_celsius.is_finite() {
                    return Err("threshold_celsius must be finite".into());
                }
                for r in &fridge.readings {
                    if !node_ok(r.node) {
                        return Err(format!("reading scheduled on nonexistent node {}", r.node));
                    }
                    if r.round > self.max_rounds {
                        return Err(format!("reading at round {} is past max_rounds", r.round));
                    }
                    if !r.temp_celsius.is_finite() {
                        return Err(format!(
                            "reading at round {} has a non-finite temperature",
                            r.round
                        ));
                    }
                }
            }
            ScenarioKind::Gossip => {
                let gossip = self
                    .gossip
                    .as_ref()
                    .ok_or("scenario `gossip` needs a [gossip] table")?;
                if gossip.updates > 0 && gossip.update_rounds == 0 {
                    return Err("update_rounds must be at least 1".into());
                }
                if gossip.update_rounds > self.max_rounds {
                    return Err("update_rounds is past max_rounds".into());
                }
            }
        }
        Ok(())
    }

    pub fn network(&self) -> NetworkModel {
        NetworkModel {
            drop_prob: self.drop_prob,
            dup_prob: self.dup_prob,
            max_delay_rounds: self.max_delay_rounds,
            partitions: self
                .partitions
                .iter()
                .map(|p| {
                    Partition::new(
                        p.from_round,
                        p.to_round,
                        p.nodes.iter().map(|n| ReplicaId(*n)),
                    )
                })
                .collect(),
        }
    }

    /// Round from which no partition is active any more.
    pub fn heal_round(&self) -> u64 {
        self.partitions
            .iter()
            .map(|p| p.to_round)
            .max()
            .unwrap_or(0)
    }
}
