use std::fmt;

use serde::{Deserialize, Serialize};

use super::block::Block;
use super::hash::HashAlgorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Stored hash does not recompute from the block contents.
    BadHash,
    /// `prev_hash` does not match the predecessor's hash.
    BadLinkage,
    /// `global_index` does not increase past the predecessor's.
    BadIndex,
    /// Cycle bookkeeping disagrees with `global_index` and capacity.
    BadBookkeeping,
    /// A carry-over block somewhere other than the head of its cycle.
    MisplacedCarryOver,
    MalformedTransaction,
    CapacityExceeded,
    /// Adjacent cycles disagree on their shared block.
    Overlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub global_index: u64,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at block {}", self.kind, self.global_index)
    }
}

/// Result of element-by-element chain verification; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, global_index: u64, kind: ViolationKind) {
        self.violations.push(Violation { global_index, kind });
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn at(&self, global_index: u64) -> impl Iterator<Item = &Violation> + '_ {
        self.violations.iter().filter(move |v| v.global_index == global_index)
    }
}

/// Anything that can be checked block by block.
pub trait Validate {
    fn validate(&self) -> ValidationReport;
}

pub fn validate_chain<V: Validate + ?Sized>(chain: &V) -> ValidationReport {
    chain.validate()
}

/// Checks one contiguous run of blocks. A carry-over block is only allowed at
/// position 0.
pub(crate) fn check_run(blocks: &[Block], capacity: u64, algorithm: HashAlgorithm, report: &mut ValidationReport) {
    for (pos, block) in blocks.iter().enumerate() {
        let g = block.header.global_index;
        if !block.verify_hash(algorithm) {
            report.push(g, ViolationKind::BadHash);
        }
        if block.transactions.iter().any(|tx| tx.check().is_err()) {
            report.push(g, ViolationKind::MalformedTransaction);
        }
        if !block.bookkeeping_consistent(capacity) {
            report.push(g, ViolationKind::BadBookkeeping);
        }
        if pos > 0 && block.header.index_in_cycle == 0 {
            report.push(g, ViolationKind::MisplacedCarryOver);
        }
        if pos > 0 {
            let prev = &blocks[pos - 1];
            if block.header.prev_hash != prev.header.hash {
                report.push(g, ViolationKind::BadLinkage);
            }
            if g <= prev.header.global_index {
                report.push(g, ViolationKind::BadIndex);
            }
        }
    }
}
