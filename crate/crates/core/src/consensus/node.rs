use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ConsensusError;
use crate::chain::{Block, ChainError, LocalChain, NodeId, PruneMode, ViolationKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    #[default]
    Alive,
    /// Down: neither creates, receives nor counts as live.
    Failed,
    /// Running with its links cut; state is kept.
    Isolated,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub messages_sent: u64,
    pub messages_received: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    /// Variant b: just the new block.
    Block(Block),
    /// Variant a: the sender's whole window, new block last.
    Chain(Vec<Block>),
}

impl Message {
    pub fn encoded_len(&self) -> usize {
        match self {
            Message::Block(block) => block.encoded_len(),
            Message::Chain(blocks) => blocks.iter().map(Block::encoded_len).sum(),
        }
    }

    /// The block being proposed.
    pub fn proposed(&self) -> Option<&Block> {
        match self {
            Message::Block(block) => Some(block),
            Message::Chain(blocks) => blocks.last(),
        }
    }
}

/// What a receiver knows about the current turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnContext {
    pub iteration: u64,
    pub scheduled_creator: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NotAlive,
    Unauthorized,
    OutOfQueue,
    BadLinkage,
    BadIndex,
    BadHash,
    NotAnExtension,
    CapacityExceeded,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::NotAlive => "not_alive",
            RejectReason::Unauthorized => "unauthorized",
            RejectReason::OutOfQueue => "out_of_queue",
            RejectReason::BadLinkage => "bad_linkage",
            RejectReason::BadIndex => "bad_index",
            RejectReason::BadHash => "bad_hash",
            RejectReason::NotAnExtension => "not_an_extension",
            RejectReason::CapacityExceeded => "capacity_exceeded",
        };
        f.write_str(s)
    }
}

impl From<ChainError> for RejectReason {
    fn from(err: ChainError) -> Self {
        match err {
            ChainError::BadHash { .. } | ChainError::MalformedTransaction { .. } => RejectReason::BadHash,
            ChainError::BadIndex { .. } => RejectReason::BadIndex,
            ChainError::CapacityExceeded { .. } | ChainError::NotAtCapacity { .. } => RejectReason::CapacityExceeded,
            ChainError::Invalid(violations) => {
                if violations.iter().any(|v| v.kind == ViolationKind::BadHash) {
                    RejectReason::BadHash
                } else if violations.iter().any(|v| v.kind == ViolationKind::CapacityExceeded) {
                    RejectReason::CapacityExceeded
                } else {
                    RejectReason::BadLinkage
                }
            }
            _ => RejectReason::BadLinkage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeState {
    pub node_id: NodeId,
    pub local_chain: LocalChain,
    pub status: NodeStatus,
    pub authorized: BTreeSet<NodeId>,
    pub counters: Counters,
}

impl NodeState {
    pub fn new(node_id: NodeId, local_chain: LocalChain, authorized: BTreeSet<NodeId>) -> Self {
        NodeState {
            node_id,
            local_chain,
            status: NodeStatus::Alive,
            authorized,
            counters: Counters::default(),
        }
    }

    pub fn is_live(&self) -> bool {
        self.status != NodeStatus::Failed
    }

    /// Validates a proposal from `sender` and, if it passes, applies it. On
    /// rejection the chain is untouched.
    pub fn handle_incoming(
        &mut self,
        message: &Message,
        sender: NodeId,
        ctx: TurnContext,
        prune: PruneMode,
    ) -> Result<(), RejectReason> {
        if self.status != NodeStatus::Alive {
            return Err(RejectReason::NotAlive);
        }
        if !self.authorized.contains(&sender) {
            return Err(RejectReason::Unauthorized);
        }
        let Some(proposed) = message.proposed() else {
            return Err(RejectReason::BadLinkage);
        };
        if sender != ctx.scheduled_creator || proposed.header.creator_id != sender {
            return Err(RejectReason::OutOfQueue);
        }
        if proposed.header.global_index != ctx.iteration {
            return Err(RejectReason::BadIndex);
        }
        match message {
            Message::Block(block) => {
                self.local_chain.push(block.clone(), prune)?;
            }
            Message::Chain(blocks) => {
                let incoming = LocalChain::from_blocks(
                    blocks.clone(),
                    self.local_chain.capacity(),
                    self.local_chain.algorithm(),
                )?;
                if !self.local_chain.is_extended_by(incoming.blocks()) {
                    return Err(RejectReason::NotAnExtension);
                }
                self.local_chain.replace(incoming);
            }
        }
        Ok(())
    }

    /// Rebuilds the window from neighbor windows, position by position: a
    /// block is kept while a strict majority of all supplied neighbors holds
    /// it on the same prefix. Returns the number of blocks adopted. If not
    /// even the first block has a majority the window is left unchanged.
    pub fn recover(&mut self, neighbors: &[&LocalChain]) -> Result<usize, ConsensusError> {
        if neighbors.is_empty() {
            return Err(ConsensusError::NoNeighbors);
        }
        let total = neighbors.len();
        let mut agreeing: Vec<&LocalChain> = neighbors.to_vec();
        let mut prefix: Vec<Block> = Vec::new();
        loop {
            let h = prefix.len();
            // Group the still-agreeing neighbors by their block at height h.
            let mut groups: Vec<(&Block, Vec<&LocalChain>)> = Vec::new();
            for &chain in &agreeing {
                if let Some(block) = chain.blocks().get(h) {
                    match groups.iter_mut().find(|(b, _)| b.header.hash == block.header.hash) {
                        Some((_, members)) => members.push(chain),
                        None => groups.push((block, vec![chain])),
                    }
                }
            }
            let Some((block, members)) = groups.into_iter().max_by_key(|(_, m)| m.len()) else {
                break;
            };
            if members.len() * 2 <= total {
                break;
            }
            prefix.push(block.clone());
            agreeing = members;
        }
        self.status = NodeStatus::Alive;
        if prefix.is_empty() {
            return Ok(0);
        }
        let adopted = prefix.len();
        let chain = LocalChain::from_blocks(prefix, self.local_chain.capacity(), self.local_chain.algorithm())?;
        self.local_chain.replace(chain);
        Ok(adopted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{HashAlgorithm, Transaction};

    const ALG: HashAlgorithm = HashAlgorithm::Sha256;

    fn registry(n: u64) -> BTreeSet<NodeId> {
        (1..=n).map(NodeId).collect()
    }

    fn node(id: u64) -> NodeState {
        NodeState::new(NodeId(id), LocalChain::with_genesis(0, 6, ALG).unwrap(), registry(6))
    }

    fn grow(chain: &mut LocalChain, creator: u64, g: u64, salt: u8) {
        let block = chain.next_block(NodeId(creator), g, g, vec![Transaction::single(creator, g, vec![salt])]);
        chain.append(block).unwrap();
    }

    fn ctx(iteration: u64, creator: u64) -> TurnContext {
        TurnContext {
            iteration,
            scheduled_creator: NodeId(creator),
        }
    }

    #[test]
    fn scheduled_block_is_accepted() {
        let mut sender = node(1);
        let mut receiver = node(2);
        grow(&mut sender.local_chain, 1, 1, 0);
        let msg = Message::Block(sender.local_chain.tip().clone());
        receiver
            .handle_incoming(&msg, NodeId(1), ctx(1, 1), PruneMode::Reset)
            .unwrap();
        assert_eq!(receiver.local_chain, sender.local_chain);
    }

    #[test]
    fn unscheduled_and_unknown_senders_are_rejected() {
        let mut rogue = node(4);
        let mut receiver = node(2);
        grow(&mut rogue.local_chain, 4, 1, 0);
        let before = receiver.clone();
        let msg = Message::Block(rogue.local_chain.tip().clone());
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(4), ctx(1, 1), PruneMode::Reset),
            Err(RejectReason::OutOfQueue)
        );
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(99), ctx(1, 99), PruneMode::Reset),
            Err(RejectReason::Unauthorized)
        );
        assert_eq!(receiver, before);
    }

    #[test]
    fn forged_creator_field_is_out_of_queue() {
        let mut sender = node(1);
        grow(&mut sender.local_chain, 3, 1, 0);
        let mut receiver = node(2);
        let msg = Message::Block(sender.local_chain.tip().clone());
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(1), ctx(1, 1), PruneMode::Reset),
            Err(RejectReason::OutOfQueue)
        );
    }

    #[test]
    fn tampered_and_misindexed_blocks() {
        let mut sender = node(1);
        grow(&mut sender.local_chain, 1, 1, 0);
        let mut receiver = node(2);
        let mut block = sender.local_chain.tip().clone();
        block.transactions[0].readings[0][0] ^= 1;
        assert_eq!(
            receiver.handle_incoming(&Message::Block(block), NodeId(1), ctx(1, 1), PruneMode::Reset),
            Err(RejectReason::BadHash)
        );
        let msg = Message::Block(sender.local_chain.tip().clone());
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(1), ctx(2, 1), PruneMode::Reset),
            Err(RejectReason::BadIndex)
        );
        receiver.status = NodeStatus::Failed;
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(1), ctx(1, 1), PruneMode::Reset),
            Err(RejectReason::NotAlive)
        );
    }

    #[test]
    fn stale_receiver_rejects_block_but_accepts_full_chain() {
        let mut sender = node(2);
        grow(&mut sender.local_chain, 1, 1, 0);
        grow(&mut sender.local_chain, 2, 2, 0);
        let mut stale = node(3);
        let block_msg = Message::Block(sender.local_chain.tip().clone());
        assert_eq!(
            stale.handle_incoming(&block_msg, NodeId(2), ctx(2, 2), PruneMode::Reset),
            Err(RejectReason::BadLinkage)
        );
        let chain_msg = Message::Chain(sender.local_chain.blocks().to_vec());
        stale
            .handle_incoming(&chain_msg, NodeId(2), ctx(2, 2), PruneMode::Reset)
            .unwrap();
        assert_eq!(stale.local_chain, sender.local_chain);
    }

    #[test]
    fn full_chain_never_truncates_or_forks() {
        let mut receiver = node(3);
        grow(&mut receiver.local_chain, 1, 1, 0);
        grow(&mut receiver.local_chain, 2, 2, 0);
        let mut fork = node(2);
        grow(&mut fork.local_chain, 1, 1, 9);
        grow(&mut fork.local_chain, 2, 2, 9);
        let before = receiver.clone();
        let msg = Message::Chain(fork.local_chain.blocks().to_vec());
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(2), ctx(2, 2), PruneMode::Reset),
            Err(RejectReason::NotAnExtension)
        );
        let mut shorter = node(1);
        grow(&mut shorter.local_chain, 1, 1, 0);
        let msg = Message::Chain(shorter.local_chain.blocks().to_vec());
        assert_eq!(
            receiver.handle_incoming(&msg, NodeId(1), ctx(1, 1), PruneMode::Reset),
            Err(RejectReason::NotAnExtension)
        );
        assert_eq!(receiver, before);
    }

    #[test]
    fn recovery_follows_agreeing_neighbors() {
        let mut reference = LocalChain::with_genesis(0, 6, ALG).unwrap();
        for g in 1..=4 {
            grow(&mut reference, g, g, 0);
        }
        let neighbors = vec![&reference; 5];
        let mut failed = node(5);
        failed.status = NodeStatus::Failed;
        grow(&mut failed.local_chain, 1, 1, 0);
        assert_eq!(failed.recover(&neighbors).unwrap(), 5);
        assert_eq!(failed.local_chain, reference);
        assert_eq!(failed.status, NodeStatus::Alive);
    }

    #[test]
    fn recovery_stops_at_a_split() {
        let mut base = LocalChain::with_genesis(0, 6, ALG).unwrap();
        for g in 1..=2 {
            grow(&mut base, g, g, 0);
        }
        let mut left = base.clone();
        grow(&mut left, 3, 3, 1);
        let mut right = base.clone();
        grow(&mut right, 3, 3, 2);
        let neighbors = [&left, &left, &right, &right];
        let mut n = node(6);
        assert_eq!(n.recover(&neighbors).unwrap(), 3);
        assert_eq!(n.local_chain, base);
    }

    #[test]
    fn recovery_needs_neighbors() {
        assert_eq!(node(1).recover(&[]), Err(ConsensusError::NoNeighbors));
    }
}
