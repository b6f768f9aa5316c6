use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::block::{slot_of, Block, BlockHeader, NodeId, Transaction};
use super::hash::{Digest, HashAlgorithm, ZERO_DIGEST};
use super::validate::{check_run, Validate, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("chain has no blocks")]
    Empty,
    #[error("capacity must be at least 1")]
    ZeroCapacity,
    #[error("block {global_index} does not link to the chain tip")]
    BadLinkage { global_index: u64 },
    #[error("block index {got} does not follow tip index {tip}")]
    BadIndex { tip: u64, got: u64 },
    #[error("block {global_index} hash does not recompute")]
    BadHash { global_index: u64 },
    #[error("block {global_index} carries a malformed transaction")]
    MalformedTransaction { global_index: u64 },
    #[error("chain already holds capacity + 1 = {limit} blocks")]
    CapacityExceeded { limit: usize },
    #[error("cycle incomplete: {len} of {required} blocks stored")]
    CycleIncomplete { len: usize, required: usize },
    #[error("sliding window holds {len} blocks, capacity is {capacity}")]
    NotAtCapacity { len: usize, capacity: usize },
    #[error("invalid chain: {0:?}")]
    Invalid(Vec<Violation>),
}

/// How a node frees memory once its chain window is full.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    /// At the end of every cycle keep only the last block, which becomes the
    /// next cycle's genesis.
    #[default]
    Reset,
    /// Keep the latest `capacity` blocks; each new block evicts the oldest.
    Sliding,
}

impl FromStr for PruneMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reset" => Ok(PruneMode::Reset),
            "sliding" => Ok(PruneMode::Sliding),
            other => Err(format!("unknown pruning mode `{other}` (expected reset|sliding)")),
        }
    }
}

/// The bounded chain window a node keeps in memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalChain {
    blocks: Vec<Block>,
    capacity: usize,
    algorithm: HashAlgorithm,
}

impl LocalChain {
    pub fn new(genesis: Block, capacity: usize, algorithm: HashAlgorithm) -> Result<Self, ChainError> {
        LocalChain::from_blocks(vec![genesis], capacity, algorithm)
    }

    pub fn with_genesis(created_at: u64, capacity: usize, algorithm: HashAlgorithm) -> Result<Self, ChainError> {
        LocalChain::new(Block::genesis(created_at, algorithm), capacity, algorithm)
    }

    /// Builds a chain from a stored window, rejecting it unless it validates.
    pub fn from_blocks(blocks: Vec<Block>, capacity: usize, algorithm: HashAlgorithm) -> Result<Self, ChainError> {
        if capacity == 0 {
            return Err(ChainError::ZeroCapacity);
        }
        if blocks.is_empty() {
            return Err(ChainError::Empty);
        }
        let chain = LocalChain {
            blocks,
            capacity,
            algorithm,
        };
        let report = chain.validate();
        if !report.is_empty() {
            return Err(ChainError::Invalid(report.violations));
        }
        Ok(chain)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("local chain is never empty")
    }

    pub fn head(&self) -> &Block {
        &self.blocks[0]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.algorithm
    }

    pub fn contains_hash(&self, hash: &Digest) -> bool {
        self.blocks.iter().any(|b| &b.header.hash == hash)
    }

    pub fn block_at_index(&self, global_index: u64) -> Option<&Block> {
        self.blocks.iter().find(|b| b.header.global_index == global_index)
    }

    /// Total storage-serialized size of the window.
    pub fn encoded_len(&self) -> usize {
        self.blocks.iter().map(Block::encoded_len).sum()
    }

    /// Builds (but does not append) the block a creator would place on this tip.
    pub fn next_block(
        &self,
        creator: NodeId,
        created_at: u64,
        global_index: u64,
        transactions: Vec<Transaction>,
    ) -> Block {
        let (cycle_index, index_in_cycle) = slot_of(global_index, self.capacity as u64);
        Block::seal(
            self.algorithm,
            BlockHeader {
                global_index,
                cycle_index,
                index_in_cycle,
                creator_id: creator,
                created_at,
                prev_hash: self.tip().header.hash,
                hash: ZERO_DIGEST,
            },
            transactions,
        )
    }

    /// Linkage, index and hash checks for a block placed on the current tip.
    pub fn check_successor(&self, block: &Block) -> Result<(), ChainError> {
        let tip = self.tip();
        let g = block.header.global_index;
        if block.header.prev_hash != tip.header.hash {
            return Err(ChainError::BadLinkage { global_index: g });
        }
        if g <= tip.header.global_index || block.header.index_in_cycle == 0 {
            return Err(ChainError::BadIndex {
                tip: tip.header.global_index,
                got: g,
            });
        }
        if !block.verify_hash(self.algorithm) {
            return Err(ChainError::BadHash { global_index: g });
        }
        if block.transactions.iter().any(|tx| tx.check().is_err()) {
            return Err(ChainError::MalformedTransaction { global_index: g });
        }
        Ok(())
    }

    /// Appends `block` to the tip. On error the chain is left unchanged.
    pub fn append(&mut self, block: Block) -> Result<(), ChainError> {
        if self.blocks.len() > self.capacity {
            return Err(ChainError::CapacityExceeded {
                limit: self.capacity + 1,
            });
        }
        self.check_successor(&block)?;
        self.blocks.push(block);
        Ok(())
    }

    /// Ends a complete cycle: keeps only the tip, relabelled as the next
    /// cycle's genesis, and returns the deleted blocks.
    pub fn prune_reset(&mut self) -> Result<Vec<Block>, ChainError> {
        let required = self.capacity + 1;
        if self.blocks.len() != required {
            return Err(ChainError::CycleIncomplete {
                len: self.blocks.len(),
                required,
            });
        }
        Ok(self.roll_over())
    }

    /// Like [`prune_reset`](Self::prune_reset) but without requiring a full
    /// window. Used at cycle boundaries of the turn clock, where lost turns
    /// can leave the window short.
    pub fn roll_over(&mut self) -> Vec<Block> {
        let carried = self.tip().as_carry_over(self.capacity as u64);
        let mut deleted = std::mem::replace(&mut self.blocks, vec![carried]);
        deleted.pop();
        deleted
    }

    /// Evicts the oldest block and appends `block`, keeping the window at
    /// `capacity` blocks. On error the chain is left unchanged.
    pub fn prune_sliding(&mut self, block: Block) -> Result<Block, ChainError> {
        if self.blocks.len() != self.capacity {
            return Err(ChainError::NotAtCapacity {
                len: self.blocks.len(),
                capacity: self.capacity,
            });
        }
        self.check_successor(&block)?;
        self.blocks.push(block);
        Ok(self.blocks.remove(0))
    }

    /// Appends under the given pruning discipline, evicting first when a
    /// sliding window is full.
    pub fn push(&mut self, block: Block, mode: PruneMode) -> Result<Option<Block>, ChainError> {
        match mode {
            PruneMode::Sliding if self.blocks.len() >= self.capacity => self.prune_sliding(block).map(Some),
            _ => self.append(block).map(|()| None),
        }
    }

    /// Whether `other` strictly extends this window: it contains the local
    /// tip, agrees on every overlapping block, and has at least one block
    /// after the tip.
    pub fn is_extended_by(&self, other: &[Block]) -> bool {
        let tip_hash = &self.tip().header.hash;
        let Some(pos) = other.iter().position(|b| &b.header.hash == tip_hash) else {
            return false;
        };
        if pos + 1 >= other.len() {
            return false;
        }
        let overlap = self.blocks.len().min(pos + 1);
        (0..overlap).all(|i| self.blocks[self.blocks.len() - 1 - i].header.hash == other[pos - i].header.hash)
    }

    /// Replaces the window wholesale; the caller has validated `blocks`.
    pub(crate) fn replace(&mut self, chain: LocalChain) {
        debug_assert_eq!(chain.capacity, self.capacity);
        self.blocks = chain.blocks;
    }

    #[cfg(test)]
    pub(crate) fn blocks_mut(&mut self) -> &mut Vec<Block> {
        &mut self.blocks
    }
}

impl Validate for LocalChain {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        check_run(&self.blocks, self.capacity as u64, self.algorithm, &mut report);
        if self.blocks.len() > self.capacity + 1 {
            report.push(self.tip().header.global_index, ViolationKind::CapacityExceeded);
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::validate::validate_chain;

    const ALG: HashAlgorithm = HashAlgorithm::Sha256;

    fn tx(k: u64) -> Vec<Transaction> {
        vec![Transaction::single(k, k * 10, k.to_be_bytes().to_vec())]
    }

    /// Chain with blocks 1..=count appended to a fresh genesis.
    fn grown(capacity: usize, count: u64) -> LocalChain {
        let mut chain = LocalChain::with_genesis(0, capacity, ALG).unwrap();
        for g in 1..=count {
            let block = chain.next_block(NodeId(g), g, g, tx(g));
            chain.append(block).unwrap();
        }
        chain
    }

    #[test]
    fn append_to_genesis() {
        let chain = grown(5, 1);
        assert_eq!(chain.len(), 2);
        assert!(validate_chain(&chain).is_empty());
    }

    #[test]
    fn append_rejects_foreign_prev_hash() {
        let mut chain = grown(5, 2);
        let mut block = chain.next_block(NodeId(3), 3, 3, tx(3));
        block.header.prev_hash = [0x5a; 32];
        let block = Block::seal(ALG, block.header, block.transactions);
        let before = chain.clone();
        assert_eq!(
            chain.append(block).unwrap_err(),
            ChainError::BadLinkage { global_index: 3 }
        );
        assert_eq!(chain, before);
    }

    #[test]
    fn append_rejects_stale_index_and_bad_hash() {
        let mut chain = grown(5, 2);
        let stale = chain.next_block(NodeId(2), 2, 2, tx(2));
        assert!(matches!(
            chain.append(stale),
            Err(ChainError::BadIndex { tip: 2, got: 2 })
        ));

        let mut forged = chain.next_block(NodeId(3), 3, 3, tx(3));
        forged.transactions[0].readings[0][0] ^= 0xff;
        assert_eq!(
            chain.append(forged).unwrap_err(),
            ChainError::BadHash { global_index: 3 }
        );
    }

    #[test]
    fn append_allows_a_skipped_turn() {
        let mut chain = grown(6, 2);
        let block = chain.next_block(NodeId(4), 4, 4, tx(4));
        chain.append(block).unwrap();
        assert_eq!(chain.tip().header.index_in_cycle, 4);
        assert!(validate_chain(&chain).is_empty());
    }

    #[test]
    fn append_refuses_past_capacity_plus_one() {
        let mut chain = grown(2, 2);
        let block = chain.next_block(NodeId(3), 3, 3, tx(3));
        assert_eq!(
            chain.append(block).unwrap_err(),
            ChainError::CapacityExceeded { limit: 3 }
        );
    }

    #[test]
    fn prune_reset_keeps_tip_as_new_genesis() {
        let mut chain = grown(5, 5);
        let original: Vec<Block> = chain.blocks().to_vec();
        let deleted = chain.prune_reset().unwrap();
        assert_eq!(deleted, original[..5].to_vec());
        assert_eq!(chain.len(), 1);
        let head = chain.head();
        assert_eq!(head.header.hash, original[5].header.hash);
        assert_eq!(head.header.index_in_cycle, 0);
        assert_eq!(head.header.cycle_index, original[5].header.cycle_index + 1);
        assert!(validate_chain(&chain).is_empty());
    }

    #[test]
    fn prune_reset_smallest_cycle() {
        let mut chain = grown(1, 1);
        let b1 = chain.tip().header.hash;
        let deleted = chain.prune_reset().unwrap();
        assert_eq!(deleted.len(), 1);
        assert_eq!(deleted[0].header.global_index, 0);
        assert_eq!(chain.head().header.hash, b1);
    }

    #[test]
    fn prune_reset_before_capacity_fails() {
        let mut chain = grown(5, 3);
        assert_eq!(
            chain.prune_reset().unwrap_err(),
            ChainError::CycleIncomplete { len: 4, required: 6 }
        );
    }

    #[test]
    fn append_after_reset_links_to_carried_block() {
        let mut chain = grown(5, 5);
        let b5 = chain.tip().header.hash;
        chain.prune_reset().unwrap();
        let next = chain.next_block(NodeId(1), 6, 6, tx(6));
        assert_eq!(next.header.prev_hash, b5);
        chain.append(next).unwrap();
        assert_eq!(chain.tip().header.index_in_cycle, 1);
        assert_eq!(chain.tip().header.cycle_index, 1);
    }

    #[test]
    fn prune_sliding_evicts_oldest() {
        let mut chain = grown(5, 4);
        assert_eq!(chain.len(), 5);
        let b5 = chain.next_block(NodeId(5), 5, 5, tx(5));
        let deleted = chain.prune_sliding(b5).unwrap();
        assert_eq!(deleted.header.global_index, 0);
        let indices: Vec<u64> = chain.blocks().iter().map(|b| b.header.global_index).collect();
        assert_eq!(indices, vec![1, 2, 3, 4, 5]);
        assert!(validate_chain(&chain).is_empty());
    }

    #[test]
    fn prune_sliding_capacity_one() {
        let mut chain = LocalChain::with_genesis(0, 1, ALG).unwrap();
        for g in 1..=4 {
            let block = chain.next_block(NodeId(g), g, g, tx(g));
            chain.prune_sliding(block).unwrap();
        }
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.tip().header.global_index, 4);
    }

    #[test]
    fn prune_sliding_requires_full_window() {
        let mut chain = grown(5, 2);
        let block = chain.next_block(NodeId(3), 3, 3, tx(3));
        assert_eq!(
            chain.prune_sliding(block).unwrap_err(),
            ChainError::NotAtCapacity { len: 3, capacity: 5 }
        );
    }

    #[test]
    fn prune_sliding_reports_linkage_errors_unchanged() {
        let mut chain = grown(3, 2);
        let mut block = chain.next_block(NodeId(3), 3, 3, tx(3));
        block.header.prev_hash = [1; 32];
        let block = Block::seal(ALG, block.header, block.transactions);
        let before = chain.clone();
        assert!(matches!(chain.prune_sliding(block), Err(ChainError::BadLinkage { .. })));
        assert_eq!(chain, before);
    }

    #[test]
    fn from_blocks_rejects_broken_windows() {
        let chain = grown(5, 4);
        let mut blocks = chain.blocks().to_vec();
        blocks.remove(2);
        assert!(matches!(
            LocalChain::from_blocks(blocks, 5, ALG),
            Err(ChainError::Invalid(_))
        ));
        assert_eq!(LocalChain::from_blocks(vec![], 5, ALG).unwrap_err(), ChainError::Empty);
        assert_eq!(
            LocalChain::with_genesis(0, 0, ALG).unwrap_err(),
            ChainError::ZeroCapacity
        );
    }

    #[test]
    fn mutated_transaction_is_named_exactly() {
        let mut chain = grown(6, 6);
        chain.blocks_mut()[3].transactions[0].readings[0][2] ^= 0x10;
        let report = validate_chain(&chain);
        assert_eq!(
            report.violations,
            vec![Violation {
                global_index: 3,
                kind: ViolationKind::BadHash
            }]
        );
    }

    #[test]
    fn extension_check() {
        let long = grown(6, 5);
        let short = grown(6, 3);
        assert!(short.is_extended_by(long.blocks()));
        assert!(!long.is_extended_by(short.blocks()));
        assert!(!long.is_extended_by(long.blocks()));
        let other = {
            let mut c = LocalChain::with_genesis(1, 6, ALG).unwrap();
            let b = c.next_block(NodeId(1), 1, 1, tx(1));
            c.append(b).unwrap();
            c
        };
        assert!(!short.is_extended_by(other.blocks()));
    }
}
