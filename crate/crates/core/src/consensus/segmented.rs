use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{stitch, FailurePlan, Network, ProtocolConfig};
use super::events::Event;
use super::finalize::{LostBlock, ResultantChain};
use super::schedule::Schedule;
use super::ConsensusError;
use crate::chain::{Block, FullChain, NodeId};
use crate::netsim::{Graph, SegmentedTopology};

/// The block that closes one segment's cycle, carried to the next segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handoff {
    pub round: u64,
    pub from_segment: usize,
    pub to_segment: usize,
    /// A boundary node shared by both segments, or the outgoing hub when
    /// none is shared.
    pub carrier: NodeId,
    pub global_index: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedOutcome {
    /// One record per (round, segment), in execution order.
    pub records: Vec<ResultantChain>,
    pub full_chain: FullChain,
    pub handoffs: Vec<Handoff>,
    /// Topology used in each round; mobiles are re-placed between rounds.
    pub topologies: Vec<SegmentedTopology>,
    pub bytes_per_iteration: Vec<u64>,
    pub events: Vec<Event>,
}

impl SegmentedOutcome {
    pub fn lost(&self) -> Vec<LostBlock> {
        self.records.iter().flat_map(|r| r.lost.iter().copied()).collect()
    }
}

fn restrict(plan: &FailurePlan, members: &BTreeSet<NodeId>, first: u64, last: u64) -> FailurePlan {
    let mut out = FailurePlan::new();
    for (node, it, kind) in plan.entries() {
        if members.contains(&node) && (first..=last).contains(&it) {
            out.insert(node, it, kind);
        }
    }
    out
}

/// Runs the segments one after another, each for one cycle over a fully
/// connected subnet of its hub and mobiles. A segment starts from the last
/// block of the previous segment, carried over as its head, so the
/// per-segment records join into one chain.
///
/// Failure entries apply to the segment that contains the node at that
/// turn; rogue proposals are not used here.
pub fn run_segmented<R: Rng + ?Sized>(
    topology: &SegmentedTopology,
    config: &ProtocolConfig,
    rounds: u64,
    rng: &mut R,
) -> Result<SegmentedOutcome, ConsensusError> {
    if rounds == 0 {
        return Err(ConsensusError::Config("rounds must be at least 1".into()));
    }
    let size = topology.segments[0].mobiles.len() + 1;
    let capacity = config.capacity.unwrap_or(size) as u64;
    if capacity == 0 {
        return Err(ConsensusError::Config("capacity must be at least 1".into()));
    }
    let mut head = Block::genesis(config.genesis_time, config.hasher);
    let mut turn = 1;
    let mut records = Vec::new();
    let mut handoffs = Vec::new();
    let mut topologies = Vec::new();
    let mut bytes_per_iteration = Vec::new();
    let mut events = Vec::new();
    let mut topo = topology.clone();
    for round in 0..rounds {
        if round > 0 {
            topo = topo.resample(rng);
        }
        let segment_count = topo.segments.len();
        for (s, segment) in topo.segments.iter().enumerate() {
            let members = segment.members();
            let member_set: BTreeSet<NodeId> = members.iter().copied().collect();
            let schedule = Schedule::build(&members, &Graph::complete(members.len()))?;
            let segment_config = ProtocolConfig {
                cycles: 1,
                capacity: Some(capacity as usize),
                failures: restrict(&config.failures, &member_set, turn, turn + capacity - 1),
                rogue: Vec::new(),
                ..config.clone()
            };
            let mut network = Network::new(schedule, segment_config, head.clone())?;
            let mut result = network.run_cycles(turn, 1, rng);
            let record = result.pop().expect("one cycle");
            let (_, seg_events, seg_bytes, _) = network.into_parts();
            events.extend(seg_events);
            bytes_per_iteration.extend(seg_bytes);
            turn += capacity;

            let (to_segment, carrier) = if s + 1 < segment_count {
                let shared = topo.shared_between(s);
                (s + 1, shared.first().copied().unwrap_or(segment.hub))
            } else {
                (0, segment.hub)
            };
            head = record.tip().as_carry_over(capacity);
            handoffs.push(Handoff {
                round,
                from_segment: s,
                to_segment,
                carrier,
                global_index: head.header.global_index,
            });
            records.push(record);
        }
        topologies.push(topo.clone());
    }
    let full_chain = stitch(&records, capacity, config.hasher)?;
    Ok(SegmentedOutcome {
        records,
        full_chain,
        handoffs,
        topologies,
        bytes_per_iteration,
        events,
    })
}
