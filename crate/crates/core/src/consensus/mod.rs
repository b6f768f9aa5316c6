//! Round-robin block creation among authorized nodes, dissemination to
//! neighbors, majority finalization and failure recovery.

pub mod engine;
pub mod events;
pub mod finalize;
pub mod node;
pub mod schedule;
pub mod segmented;

use thiserror::Error;

use crate::chain::{AssemblyError, ChainError, NodeId};

pub use engine::{
    run_protocol, FailureKind, FailurePlan, Network, ProtocolConfig, RogueProposal, RunOutcome, Traffic, Variant,
};
pub use events::{Action, Event, Outcome};
pub use finalize::{accepts, finalize_turns, LostBlock, ResultantChain};
pub use node::{Counters, Message, NodeState, NodeStatus, RejectReason, TurnContext};
pub use schedule::{build_schedule, Schedule, ScheduleEntry};
pub use segmented::{run_segmented, Handoff, SegmentedOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("schedule has no nodes")]
    Empty,
    #[error("node id {0:?} appears more than once")]
    DuplicateId(NodeId),
    #[error("{ids} node ids supplied for a topology of {nodes} nodes")]
    TopologyMismatch { ids: usize, nodes: usize },
    #[error("activation times must be strictly increasing")]
    NonIncreasingActivation,
    #[error("no neighbor chains to recover from")]
    NoNeighbors,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}
