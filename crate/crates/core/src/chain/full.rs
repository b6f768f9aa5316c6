use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::block::Block;
use super::hash::{Digest, HashAlgorithm};
use super::validate::{check_run, Validate, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssemblyError {
    #[error("no cycle records supplied")]
    Empty,
    #[error("cycle {cycle} is empty")]
    EmptyCycle { cycle: usize },
    #[error("cycle {cycle} is not internally linked: {violations:?}")]
    LinkageViolation { cycle: usize, violations: Vec<Violation> },
    #[error("cycle {cycle} does not start with the last block of cycle {prev}", prev = cycle - 1)]
    OverlapViolation {
        cycle: usize,
        expected: Digest,
        found: Digest,
    },
}

/// The complete chain as seen by an aggregator: one record per cycle.
///
/// Record `i` starts with the block carried over from record `i - 1` (or the
/// genesis block for the first record), so adjacent rows share exactly one
/// block. Viewed as a matrix, row `i` is the cycle and column `j` its
/// `index_in_cycle`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullChain {
    cycles: Vec<Vec<Block>>,
    capacity: u64,
    algorithm: HashAlgorithm,
}

/// Joins per-cycle records into one chain, checking each record's internal
/// linkage and the shared block between neighbouring cycles.
pub fn assemble_full_chain(
    cycle_records: Vec<Vec<Block>>,
    capacity: u64,
    algorithm: HashAlgorithm,
) -> Result<FullChain, AssemblyError> {
    if cycle_records.is_empty() {
        return Err(AssemblyError::Empty);
    }
    for (cycle, record) in cycle_records.iter().enumerate() {
        if record.is_empty() {
            return Err(AssemblyError::EmptyCycle { cycle });
        }
        if cycle > 0 {
            let expected = cycle_records[cycle - 1].last().unwrap().header.hash;
            let found = record[0].header.hash;
            if expected != found {
                return Err(AssemblyError::OverlapViolation { cycle, expected, found });
            }
        }
        let mut report = ValidationReport::default();
        check_run(record, capacity, algorithm, &mut report);
        if !report.is_empty() {
            return Err(AssemblyError::LinkageViolation {
                cycle,
                violations: report.violations,
            });
        }
    }
    Ok(FullChain {
        cycles: cycle_records,
        capacity,
        algorithm,
    })
}

impl FullChain {
    pub fn genesis(&self) -> &Block {
        &self.cycles[0][0]
    }

    /// Matrix rows, each including its leading carried-over block.
    pub fn cycles(&self) -> &[Vec<Block>] {
        &self.cycles
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn algorithm(&self) -> HashAlgorithm {
        self.algorithm
    }

    /// Every distinct block once, in chain order: the genesis followed by
    /// each cycle without its shared head.
    pub fn blocks(&self) -> impl Iterator<Item = &Block> + '_ {
        std::iter::once(self.genesis()).chain(self.cycles.iter().flat_map(|c| c[1..].iter()))
    }

    pub fn len(&self) -> usize {
        1 + self.cycles.iter().map(|c| c.len() - 1).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tip(&self) -> &Block {
        self.cycles.last().and_then(|c| c.last()).unwrap()
    }

    /// Global indices missing between the genesis and the tip.
    pub fn gaps(&self) -> Vec<u64> {
        let mut gaps = Vec::new();
        let mut expected = self.genesis().header.global_index + 1;
        for block in self.blocks().skip(1) {
            gaps.extend(expected..block.header.global_index);
            expected = block.header.global_index + 1;
        }
        gaps
    }

    /// `(row, column)` of a block in the cycle matrix.
    pub fn matrix_position(&self, global_index: u64) -> Option<(usize, u64)> {
        self.cycles.iter().enumerate().find_map(|(row, blocks)| {
            blocks[1..]
                .iter()
                .find(|b| b.header.global_index == global_index)
                .map(|b| (row, b.header.index_in_cycle))
        })
    }
}

impl Validate for FullChain {
    fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        for (i, record) in self.cycles.iter().enumerate() {
            check_run(record, self.capacity, self.algorithm, &mut report);
            if i > 0 {
                let prev = self.cycles[i - 1].last().unwrap();
                if prev.header.hash != record[0].header.hash {
                    report.push(record[0].header.global_index, ViolationKind::Overlap);
                }
            }
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::block::{NodeId, Transaction};
    use crate::chain::local::LocalChain;
    use crate::chain::validate::validate_chain;

    const ALG: HashAlgorithm = HashAlgorithm::Sha256;

    /// Replays `cycles` complete cycles with prune_reset, returning each
    /// cycle's window as recorded just before pruning.
    fn reset_replay(capacity: usize, cycles: u64) -> Vec<Vec<Block>> {
        let mut chain = LocalChain::with_genesis(0, capacity, ALG).unwrap();
        let mut records = Vec::new();
        for g in 1..=cycles * capacity as u64 {
            let block = chain.next_block(
                NodeId(g % 3 + 1),
                g * 1000,
                g,
                vec![Transaction::single(g, g, vec![g as u8])],
            );
            chain.append(block).unwrap();
            if g % capacity as u64 == 0 {
                records.push(chain.blocks().to_vec());
                if g < cycles * capacity as u64 {
                    chain.prune_reset().unwrap();
                }
            }
        }
        records
    }

    #[test]
    fn single_cycle_is_genesis_plus_cycle() {
        let records = reset_replay(4, 1);
        let full = assemble_full_chain(records.clone(), 4, ALG).unwrap();
        assert_eq!(full.len(), 5);
        assert_eq!(full.genesis(), &records[0][0]);
        assert_eq!(full.blocks().count(), 5);
        assert!(full.gaps().is_empty());
    }

    #[test]
    fn two_cycle_replay_overlaps() {
        let records = reset_replay(5, 2);
        assert_eq!(records[0].last().unwrap().header.hash, records[1][0].header.hash);
        let full = assemble_full_chain(records, 5, ALG).unwrap();
        assert_eq!(full.len(), 11);
        let indices: Vec<u64> = full.blocks().map(|b| b.header.global_index).collect();
        assert_eq!(indices, (0..=10).collect::<Vec<_>>());
        assert!(validate_chain(&full).is_empty());
        assert_eq!(full.matrix_position(7), Some((1, 2)));
        assert_eq!(full.matrix_position(5), Some((0, 5)));
    }

    #[test]
    fn perturbed_head_is_an_overlap_violation() {
        let mut records = reset_replay(3, 2);
        records[1][0].header.hash[0] ^= 1;
        assert!(matches!(
            assemble_full_chain(records, 3, ALG).unwrap_err(),
            AssemblyError::OverlapViolation { cycle: 1, .. }
        ));
    }

    #[test]
    fn broken_record_is_a_linkage_violation() {
        let mut records = reset_replay(3, 2);
        records[0].remove(2);
        assert!(matches!(
            assemble_full_chain(records, 3, ALG).unwrap_err(),
            AssemblyError::LinkageViolation { cycle: 0, .. }
        ));
    }

    #[test]
    fn foreign_second_cycle_is_an_overlap_violation() {
        let records = reset_replay(3, 2);
        let mut other = LocalChain::with_genesis(99, 3, ALG).unwrap();
        for g in 1..=3 {
            let b = other.next_block(NodeId(1), g, g, vec![]);
            other.append(b).unwrap();
        }
        let broken = vec![records[0].clone(), other.blocks().to_vec()];
        assert!(matches!(
            assemble_full_chain(broken, 3, ALG).unwrap_err(),
            AssemblyError::OverlapViolation { cycle: 1, .. }
        ));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(assemble_full_chain(vec![], 3, ALG).unwrap_err(), AssemblyError::Empty);
        assert_eq!(
            assemble_full_chain(vec![vec![]], 3, ALG).unwrap_err(),
            AssemblyError::EmptyCycle { cycle: 0 }
        );
    }
}
