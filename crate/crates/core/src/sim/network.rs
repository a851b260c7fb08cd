use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::replica::ReplicaId;

/// A network split active for rounds `from_round..to_round`. Nodes in `side`
/// cannot exchange messages with nodes outside it while it is active.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub from_round: u64,
    pub to_round: u64,
    pub side: BTreeSet<ReplicaId>,
}

impl Partition {
    pub fn new(from_round: u64, to_round: u64, side: impl IntoIterator<Item = ReplicaId>) -> Self {
        Partition {
            from_round,
            to_round,
            side: side.into_iter().collect(),
        }
    }

    pub fn is_active(&self, round: u64) -> bool {
        self.from_round <= round && round < self.to_round
    }

    pub fn separates(&self, a: ReplicaId, b: ReplicaId, round: u64) -> bool {
        self.is_active(round) && self.side.contains(&a) != self.side.contains(&b)
    }
}

/// Fault model applied to every envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub drop_prob: f64,
    pub dup_prob: f64,
    pub max_delay_rounds: u64,
    pub partitions: Vec<Partition>,
}

impl Default for NetworkModel {
    fn default() -> Self {
        NetworkModel::lossless()
    }
}

impl NetworkModel {
    pub fn lossless() -> Self {
        NetworkModel {
            drop_prob: 0.0,
            dup_prob: 0.0,
            max_delay_rounds: 0,
            partitions: Vec::new(),
        }
    }

    pub fn validate(&self, nodes: usize) -> Result<(), SimError> {
        for (name, p) in [("drop_prob", self.drop_prob), ("dup_prob", self.dup_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::Config(format!(
                    "{name} must be within [0, 1], got {p}"
                )));
            }
        }
        for part in &self.partitions {
            if part.from_round > part.to_round {
                return Err(SimError::Config(format!(
                    "partition interval {}..{} is reversed",
                    part.from_round, part.to_round
                )));
            }
            if let Some(bad) = part.side.iter().find(|r| r.index() >= nodes) {
                return Err(SimError::Config(format!(
                    "partition names unknown node {bad}"
                )));
            }
        }
        Ok(())
    }

    /// Whether `a` and `b` are cut off from each other at `round`.
    pub fn partitioned(&self, a: ReplicaId, b: ReplicaId, round: u64) -> bool {
        self.partitions.iter().any(|p| p.separates(a, b, round))
    }

    /// Last round at which any partition is active, if any.
    pub fn last_partition_round(&self) -> Option<u64> {
        self.partitions
            .iter()
            .filter(|p| p.to_round > p.from_round)
            .map(|p| p.to_round - 1)
            .max()
    }
}
