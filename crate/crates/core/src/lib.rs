//! Rolling blockchain for wireless sensor networks.
//!
//! * [`chain`]: hash-linked blocks, the bounded per-node chain window and its
//!   two pruning disciplines, and assembly of the complete multi-cycle chain.
//! * [`consensus`]: round-robin block creation, neighbour validation,
//!   recovery and majority finalization.
//! * [`netsim`]: topology generators, link-removal attacks and Monte Carlo
//!   path-probability estimation.

pub mod chain;
pub mod consensus;
pub mod netsim;
