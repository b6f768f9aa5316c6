use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::chain::NodeId;
use crate::netsim::Graph;

/// One node's slot in the round-robin order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub node_id: NodeId,
    pub activation_time: u64,
    /// Neighbors in the order the node sends to them.
    pub neighbor_ids: Vec<NodeId>,
}

/// The creation queue: entries ordered by activation time, which is also id
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
}

/// Builds the queue for `node_ids`, where `node_ids[v]` names vertex `v` of
/// `topology`. Activation times are `1..=m` in ascending id order and each
/// neighbor list is sorted by id.
pub fn build_schedule(node_ids: &[NodeId], topology: &Graph) -> Result<Schedule, ConsensusError> {
    Schedule::build(node_ids, topology)
}

impl Schedule {
    pub fn build(node_ids: &[NodeId], topology: &Graph) -> Result<Self, ConsensusError> {
        if node_ids.is_empty() {
            return Err(ConsensusError::Empty);
        }
        let mut seen = BTreeSet::new();
        for &id in node_ids {
            if !seen.insert(id) {
                return Err(ConsensusError::DuplicateId(id));
            }
        }
        if node_ids.len() != topology.node_count() {
            return Err(ConsensusError::TopologyMismatch {
                ids: node_ids.len(),
                nodes: topology.node_count(),
            });
        }
        let mut order: Vec<usize> = (0..node_ids.len()).collect();
        order.sort_by_key(|&v| node_ids[v]);
        let entries = order
            .into_iter()
            .enumerate()
            .map(|(slot, v)| {
                let mut neighbor_ids: Vec<NodeId> = topology.neighbors(v).iter().map(|&w| node_ids[w]).collect();
                neighbor_ids.sort_unstable();
                ScheduleEntry {
                    node_id: node_ids[v],
                    activation_time: slot as u64 + 1,
                    neighbor_ids,
                }
            })
            .collect();
        Ok(Schedule { entries })
    }

    /// Takes hand-written entries, checking ids are distinct and activation
    /// times strictly increase.
    pub fn from_entries(entries: Vec<ScheduleEntry>) -> Result<Self, ConsensusError> {
        if entries.is_empty() {
            return Err(ConsensusError::Empty);
        }
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.node_id) {
                return Err(ConsensusError::DuplicateId(e.node_id));
            }
        }
        if entries.windows(2).any(|w| w[0].activation_time >= w[1].activation_time) {
            return Err(ConsensusError::NonIncreasingActivation);
        }
        Ok(Schedule { entries })
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.node_id)
    }

    pub fn entry(&self, id: NodeId) -> Option<&ScheduleEntry> {
        self.entries.iter().find(|e| e.node_id == id)
    }

    pub fn position(&self, id: NodeId) -> Option<usize> {
        self.entries.iter().position(|e| e.node_id == id)
    }

    /// Creator for turn `turn` (1-based); the queue repeats every `len()` turns.
    pub fn creator_for(&self, turn: u64) -> &ScheduleEntry {
        assert!(turn >= 1, "turns are numbered from 1");
        &self.entries[((turn - 1) % self.entries.len() as u64) as usize]
    }
}
