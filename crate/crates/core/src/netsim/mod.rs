//! Topologies, link-removal attacks and Monte Carlo path statistics.

pub mod attack;
pub mod brute;
pub mod deployment;
pub mod graph;
pub mod montecarlo;
pub mod random;
pub mod seeds;
pub mod segmented;

use thiserror::Error;

pub use attack::{
    attack_sweep, removal_count, remove_links, AttackRow, AttackSweep, AttackSweepReport, CoupledRemoval, RemovalMode,
};
pub use brute::brute_force_path_probability;
pub use deployment::{gen_linear_deployment, Deployment, DeploymentParams};
pub use graph::{max_edges, shortest_path_length, Graph, NodeKind, Point};
pub use montecarlo::{
    connectivity_sweep, mc_path_probability, ConnectivityReport, ConnectivityRow, ConnectivitySweep, Estimate,
    ThresholdMarker,
};
pub use random::{gen_bernoulli_graph, gen_random_graph, EdgeModel};
pub use segmented::{gen_segmented_topology, Segment, SegmentedTopology};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetsimError {
    #[error("L = {l} exceeds Lmax = n(n-1)/2 = {lmax}")]
    LTooLarge { l: usize, lmax: usize },
    #[error("n = {n} is too large to enumerate (max {max})")]
    TooLargeToEnumerate { n: usize, max: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("node {node} out of range for {nodes} nodes")]
    InvalidNode { node: usize, nodes: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("removal fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("deployment area is degenerate")]
    DegenerateArea,
    #[error("{0}")]
    Config(String),
}
