//! Canonical byte encoding of blocks.
//!
//! Storage layout (all integers big-endian):
//!
//! ```text
//! "RBC1"
//! global_index u64 | cycle_index u64 | index_in_cycle u64 | creator_id u64 | created_at u64
//! prev_hash [32] | hash [32]
//! tx_count u32
//! per transaction:
//!   sensor_id u64 | t0 u64 | step u64 | reading_count u32
//!   per reading: len u32 | bytes
//!   payload_encrypted u8 (0 or 1)
//! ```
//!
//! The hash preimage is the same stream with `cycle_index`, `index_in_cycle`
//! and `hash` left out. A chain file is a plain concatenation of encoded
//! blocks.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::block::{Block, BlockHeader, NodeId, Transaction};
use super::hash::Digest;

pub const MAGIC: &[u8; 4] = b"RBC1";

const HEADER_LEN: usize = 4 + 5 * 8 + 2 * 32 + 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic bytes at offset {offset}")]
    BadMagic { offset: usize },
    #[error("input truncated at offset {offset}")]
    Truncated { offset: usize },
    #[error("invalid encryption flag {value} at offset {offset}")]
    BadFlag { value: u8, offset: usize },
}

fn len_u32(len: usize) -> u32 {
    u32::try_from(len).expect("length exceeds u32::MAX")
}

fn put_transactions(out: &mut Vec<u8>, transactions: &[Transaction]) {
    out.extend_from_slice(&len_u32(transactions.len()).to_be_bytes());
    for tx in transactions {
        out.extend_from_slice(&tx.sensor_id.to_be_bytes());
        out.extend_from_slice(&tx.t0.to_be_bytes());
        out.extend_from_slice(&tx.step.to_be_bytes());
        out.extend_from_slice(&len_u32(tx.readings.len()).to_be_bytes());
        for reading in &tx.readings {
            out.extend_from_slice(&len_u32(reading.len()).to_be_bytes());
            out.extend_from_slice(reading);
        }
        out.push(u8::from(tx.payload_encrypted));
    }
}

fn transactions_len(transactions: &[Transaction]) -> usize {
    4 + transactions
        .iter()
        .map(|tx| 8 * 3 + 4 + tx.readings.iter().map(|r| 4 + r.len()).sum::<usize>() + 1)
        .sum::<usize>()
}

pub fn hash_preimage(header: &BlockHeader, transactions: &[Transaction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 3 * 8 + 32 + transactions_len(transactions));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&header.global_index.to_be_bytes());
    out.extend_from_slice(&header.creator_id.0.to_be_bytes());
    out.extend_from_slice(&header.created_at.to_be_bytes());
    out.extend_from_slice(&header.prev_hash);
    put_transactions(&mut out, transactions);
    out
}

pub fn encoded_block_len(block: &Block) -> usize {
    HEADER_LEN - 4 + transactions_len(&block.transactions)
}

pub fn encode_block_into(out: &mut Vec<u8>, block: &Block) {
    let h = &block.header;
    out.reserve(encoded_block_len(block));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&h.global_index.to_be_bytes());
    out.extend_from_slice(&h.cycle_index.to_be_bytes());
    out.extend_from_slice(&h.index_in_cycle.to_be_bytes());
    out.extend_from_slice(&h.creator_id.0.to_be_bytes());
    out.extend_from_slice(&h.created_at.to_be_bytes());
    out.extend_from_slice(&h.prev_hash);
    out.extend_from_slice(&h.hash);
    put_transactions(out, &block.transactions);
}

pub fn encode_block(block: &Block) -> Vec<u8> {
    let mut out = Vec::new();
    encode_block_into(&mut out, block);
    out
}

pub fn encode_chain<'a>(blocks: impl IntoIterator<Item = &'a Block>) -> Vec<u8> {
    let mut out = Vec::new();
    for block in blocks {
        encode_block_into(&mut out, block);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or(DecodeError::Truncated { offset: self.pos })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn digest(&mut self) -> Result<Digest, DecodeError> {
        Ok(self.take(32)?.try_into().unwrap())
    }
}

fn read_block(r: &mut Reader<'_>) -> Result<Block, DecodeError> {
    let start = r.pos;
    if r.take(4)? != MAGIC {
        return Err(DecodeError::BadMagic { offset: start });
    }
    let header = BlockHeader {
        global_index: r.u64()?,
        cycle_index: r.u64()?,
        index_in_cycle: r.u64()?,
        creator_id: NodeId(r.u64()?),
        created_at: r.u64()?,
        prev_hash: r.digest()?,
        hash: r.digest()?,
    };
    let tx_count = r.u32()?;
    // Each transaction needs at least 29 bytes; don't trust the count for allocation.
    let mut transactions = Vec::with_capacity((tx_count as usize).min(r.bytes.len() / 29));
    for _ in 0..tx_count {
        let sensor_id = r.u64()?;
        let t0 = r.u64()?;
        let step = r.u64()?;
        let reading_count = r.u32()?;
        let mut readings = Vec::with_capacity((reading_count as usize).min(r.bytes.len() / 4));
        for _ in 0..reading_count {
            let len = r.u32()? as usize;
            readings.push(r.take(len)?.to_vec());
        }
        let flag_offset = r.pos;
        let payload_encrypted = match r.take(1)?[0] {
            0 => false,
            1 => true,
            value => {
                return Err(DecodeError::BadFlag {
                    value,
                    offset: flag_offset,
                })
            }
        };
        transactions.push(Transaction {
            sensor_id,
            t0,
            step,
            readings,
            payload_encrypted,
        });
    }
    Ok(Block { header, transactions })
}

/// Decodes one block from the front of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_block(bytes: &[u8]) -> Result<(Block, usize), DecodeError> {
    let mut reader = Reader { bytes, pos: 0 };
    let block = read_block(&mut reader)?;
    Ok((block, reader.pos))
}

pub fn decode_chain(bytes: &[u8]) -> Result<Vec<Block>, DecodeError> {
    let mut reader = Reader { bytes, pos: 0 };
    let mut blocks = Vec::new();
    while reader.pos < bytes.len() {
        blocks.push(read_block(&mut reader)?);
    }
    Ok(blocks)
}

pub fn write_chain_file<'a>(path: impl AsRef<Path>, blocks: impl IntoIterator<Item = &'a Block>) -> io::Result<()> {
    fs::write(path, encode_chain(blocks))
}

pub fn read_chain_file(path: impl AsRef<Path>) -> io::Result<Vec<Block>> {
    let bytes = fs::read(path)?;
    decode_chain(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
