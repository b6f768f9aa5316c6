//! Blocks, transactions and the bounded chain window each node stores.

pub mod block;
pub mod codec;
pub mod full;
pub mod hash;
pub mod local;
pub mod validate;

pub use block::{hash_block, Block, BlockHeader, NodeId, Transaction, TransactionError};
pub use full::{assemble_full_chain, AssemblyError, FullChain};
pub use hash::{Digest, HashAlgorithm, ZERO_DIGEST};
pub use local::{ChainError, LocalChain, PruneMode};
pub use validate::{validate_chain, Validate, ValidationReport, Violation, ViolationKind};
