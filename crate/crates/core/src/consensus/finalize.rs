use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::node::NodeState;
use super::schedule::Schedule;
use crate::chain::validate::check_run;
use crate::chain::{Block, Digest, HashAlgorithm, NodeId, Validate, ValidationReport};

/// Strict majority threshold: `tally / live > 0.51`, in integers.
pub fn accepts(tally: usize, live: usize) -> bool {
    live > 0 && tally * 100 > 51 * live
}

/// A turn whose block did not reach the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LostBlock {
    pub global_index: u64,
    pub creator_id: NodeId,
    /// Holders of the most widely held candidate; 0 when no block exists.
    pub best_tally: usize,
}

/// Blocks confirmed by the network over a range of turns, on top of the
/// head the range started from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultantChain {
    pub head: Block,
    pub accepted: Vec<Block>,
    pub lost: Vec<LostBlock>,
    /// Holder count for each accepted block.
    pub confirmations: Vec<usize>,
    pub live_count: usize,
    pub capacity: u64,
    pub algorithm: HashAlgorithm,
}

impl ResultantChain {
    /// Head followed by the accepted blocks.
    pub fn blocks(&self) -> Vec<Block> {
        std::iter::once(self.head.clone())
            .chain(self.accepted.iter().cloned())
            .collect()
    }

    pub fn tip(&self) -> &Block {
        self.accepted.last().unwrap_or(&self.head)
    }

    pub fn lost_indices(&self) -> Vec<u64> {
        self.lost.iter().map(|l| l.global_index).collect()
    }
}

impl Validate for ResultantChain {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_run(&self.blocks(), self.capacity, self.algorithm, &mut report);
        report
    }
}

/// Tallies, for each turn in `turns`, how many live nodes hold each
/// candidate block and keeps the most widely held one if it clears the
/// threshold. Ties go to the smaller hash. A winner that does not link to
/// the previously accepted block is treated as lost.
pub fn finalize_turns(
    nodes: &[NodeState],
    turns: RangeInclusive<u64>,
    schedule: &Schedule,
    head: Block,
    capacity: u64,
    algorithm: HashAlgorithm,
) -> ResultantChain {
    let live: Vec<&NodeState> = nodes.iter().filter(|n| n.is_live()).collect();
    let live_count = live.len();
    let mut accepted: Vec<Block> = Vec::new();
    let mut confirmations = Vec::new();
    let mut lost = Vec::new();
    for g in turns {
        let mut candidates: Vec<(Digest, &Block, usize)> = Vec::new();
        for node in &live {
            if let Some(block) = node.local_chain.block_at_index(g) {
                match candidates.iter_mut().find(|(h, _, _)| *h == block.header.hash) {
                    Some((_, _, count)) => *count += 1,
                    None => candidates.push((block.header.hash, block, 1)),
                }
            }
        }
        candidates.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
        let tip_hash = accepted.last().unwrap_or(&head).header.hash;
        match candidates.first() {
            Some(&(_, block, tally)) if accepts(tally, live_count) && block.header.prev_hash == tip_hash => {
                accepted.push(block.clone());
                confirmations.push(tally);
            }
            best => lost.push(LostBlock {
                global_index: g,
                creator_id: schedule.creator_for(g).node_id,
                best_tally: best.map_or(0, |c| c.2),
            }),
        }
    }
    ResultantChain {
        head,
        accepted,
        lost,
        confirmations,
        live_count,
        capacity,
        algorithm,
    }
}
