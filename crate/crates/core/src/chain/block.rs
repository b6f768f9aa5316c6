use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::codec;
use super::hash::{Digest, HashAlgorithm, ZERO_DIGEST};

/// Identity of a network device. `NodeId(0)` is reserved for the genesis block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl NodeId {
    pub const GENESIS: NodeId = NodeId(0);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransactionError {
    #[error("transaction carries no readings")]
    NoReadings,
    #[error("multi-segment transaction needs a positive step")]
    ZeroStep,
    #[error("measurement times overflow u64")]
    TimeOverflow,
}

/// One sensor's measurements, as recorded in a block's data section.
///
/// A multi-segment transaction holds several readings taken `step`
/// milliseconds apart, starting at `t0`. Readings are opaque bytes; any
/// encryption happens before they reach the chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transaction {
    pub sensor_id: u64,
    pub t0: u64,
    pub step: u64,
    pub readings: Vec<Vec<u8>>,
    pub payload_encrypted: bool,
}

impl Transaction {
    pub fn single(sensor_id: u64, t0: u64, reading: Vec<u8>) -> Self {
        Transaction {
            sensor_id,
            t0,
            step: 0,
            readings: vec![reading],
            payload_encrypted: false,
        }
    }

    pub fn series(sensor_id: u64, t0: u64, step: u64, readings: Vec<Vec<u8>>) -> Result<Self, TransactionError> {
        let tx = Transaction {
            sensor_id,
            t0,
            step,
            readings,
            payload_encrypted: false,
        };
        tx.check()?;
        Ok(tx)
    }

    pub fn check(&self) -> Result<(), TransactionError> {
        if self.readings.is_empty() {
            return Err(TransactionError::NoReadings);
        }
        if self.readings.len() > 1 {
            if self.step == 0 {
                return Err(TransactionError::ZeroStep);
            }
            let last = (self.readings.len() - 1) as u64;
            last.checked_mul(self.step)
                .and_then(|span| span.checked_add(self.t0))
                .ok_or(TransactionError::TimeOverflow)?;
        }
        Ok(())
    }

    /// Implied time of each measurement: `t0 + k * step`.
    pub fn measurement_times(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.readings.len() as u64).map(move |k| self.t0 + k * self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockHeader {
    /// End-to-end block number; equals the turn in which the block was created.
    pub global_index: u64,
    pub cycle_index: u64,
    /// Position inside the cycle, `0` only for a genesis or carry-over block.
    pub index_in_cycle: u64,
    pub creator_id: NodeId,
    pub created_at: u64,
    pub prev_hash: Digest,
    pub hash: Digest,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

/// Digest of a block's hashed fields.
///
/// Only `global_index`, `creator_id`, `created_at`, `prev_hash` and the
/// transactions are covered; `hash` itself and the cycle bookkeeping fields
/// are not, so a carried-over block keeps its identity across cycles.
pub fn hash_block(algorithm: HashAlgorithm, header: &BlockHeader, transactions: &[Transaction]) -> Digest {
    algorithm.digest(&codec::hash_preimage(header, transactions))
}

/// Cycle bookkeeping `(cycle_index, index_in_cycle)` for an ordinary block.
pub fn slot_of(global_index: u64, capacity: u64) -> (u64, u64) {
    if global_index == 0 {
        return (0, 0);
    }
    let zero_based = global_index - 1;
    (zero_based / capacity, zero_based % capacity + 1)
}

/// Cycle bookkeeping for a block carried over as the head of the next cycle.
pub fn carry_slot_of(global_index: u64, capacity: u64) -> (u64, u64) {
    if global_index == 0 {
        return (0, 0);
    }
    (slot_of(global_index, capacity).0 + 1, 0)
}

impl Block {
    pub fn genesis(created_at: u64, algorithm: HashAlgorithm) -> Block {
        Block::seal(
            algorithm,
            BlockHeader {
                global_index: 0,
                cycle_index: 0,
                index_in_cycle: 0,
                creator_id: NodeId::GENESIS,
                created_at,
                prev_hash: ZERO_DIGEST,
                hash: ZERO_DIGEST,
            },
            Vec::new(),
        )
    }

    /// Fills in `header.hash` from the remaining contents.
    pub fn seal(algorithm: HashAlgorithm, mut header: BlockHeader, transactions: Vec<Transaction>) -> Block {
        header.hash = hash_block(algorithm, &header, &transactions);
        Block { header, transactions }
    }

    pub fn hash(&self) -> &Digest {
        &self.header.hash
    }

    pub fn global_index(&self) -> u64 {
        self.header.global_index
    }

    pub fn compute_hash(&self, algorithm: HashAlgorithm) -> Digest {
        hash_block(algorithm, &self.header, &self.transactions)
    }

    pub fn verify_hash(&self, algorithm: HashAlgorithm) -> bool {
        self.compute_hash(algorithm) == self.header.hash
    }

    pub fn is_carry_over(&self) -> bool {
        self.header.index_in_cycle == 0 && self.header.global_index > 0
    }

    /// Whether the bookkeeping fields agree with `global_index` for this capacity.
    pub fn bookkeeping_consistent(&self, capacity: u64) -> bool {
        let h = &self.header;
        let expected = if h.index_in_cycle == 0 {
            carry_slot_of(h.global_index, capacity)
        } else {
            slot_of(h.global_index, capacity)
        };
        (h.cycle_index, h.index_in_cycle) == expected
    }

    /// Copy of this block relabelled as the head of the following cycle.
    pub fn as_carry_over(&self, capacity: u64) -> Block {
        let mut carried = self.clone();
        if !self.is_carry_over() {
            let (cycle, index) = carry_slot_of(self.header.global_index, capacity);
            carried.header.cycle_index = cycle;
            carried.header.index_in_cycle = index;
        }
        carried
    }

    /// Size of the storage serialization in bytes.
    pub fn encoded_len(&self) -> usize {
        codec::encoded_block_len(self)
    }
}
