use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rollchain_core::chain::{HashAlgorithm, NodeId, PruneMode};
use rollchain_core::consensus::{FailureKind, FailurePlan, RogueProposal, Traffic, Variant};
use rollchain_core::netsim::{max_edges, DeploymentParams, EdgeModel, RemovalMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ChainReplay,
    Connectivity,
    AttackSweep,
    Protocol,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ChainReplay => "chain-replay",
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::AttackSweep => "attack-sweep",
            ExperimentKind::Protocol => "protocol",
        }
    }

    fn section(self) -> &'static str {
        match self {
            ExperimentKind::ChainReplay => "chain",
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::AttackSweep => "attack",
            ExperimentKind::Protocol => "protocol",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv|json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marker {
    pub n: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivitySection {
    pub node_counts: Vec<usize>,
    /// Defaults to every L in `1..=Lmax` for each n.
    pub edge_counts: Option<Vec<usize>>,
    pub trials: u64,
    #[serde(default)]
    pub model: EdgeModel,
    #[serde(default)]
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub line_nodes: usize,
    pub spacing: f64,
    pub radius: f64,
    pub half_width: f64,
    pub densities: Vec<f64>,
    pub fractions: Vec<f64>,
    pub trials: u64,
    #[serde(default)]
    pub removal: RemovalMode,
}

impl AttackSection {
    pub fn deployment(&self) -> DeploymentParams {
        DeploymentParams {
            line_nodes: self.line_nodes,
            spacing: self.spacing,
            radius: self.radius,
            extra_density: 0.0,
            half_width: self.half_width,
        }
    }
}

fn default_readings() -> usize {
    Traffic::default().readings_per_block
}

fn default_reading_bytes() -> usize {
    Traffic::default().reading_bytes
}

fn default_cycles() -> u64 {
    1
}

fn default_tick() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub capacity: usize,
    /// Number of blocks appended after the genesis.
    pub blocks: u64,
    #[serde(default)]
    pub prune: PruneMode,
    #[serde(default)]
    pub hasher: HashAlgorithm,
    /// Creators rotate over ids `1..=writers`; defaults to `capacity`.
    pub writers: Option<u64>,
    #[serde(default)]
    pub genesis_time: u64,
    #[serde(default = "default_readings")]
    pub readings_per_block: usize,
    #[serde(default = "default_reading_bytes")]
    pub reading_bytes: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    #[default]
    Complete,
    Ring,
    Path,
    /// `edges` links drawn uniformly at random.
    Random,
    /// Hubs with overlapping mobile subnets.
    Segmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureEntry {
    pub node: u64,
    pub iterations: Vec<u64>,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RogueEntry {
    pub iteration: u64,
    pub sender: u64,
    pub targets: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentedSection {
    pub hubs: usize,
    pub mobiles_per_segment: usize,
    #[serde(default)]
    pub overlap: usize,
    #[serde(default = "default_cycles")]
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    /// Node ids are `1..=nodes`. Ignored for segmented topologies.
    #[serde(default)]
    pub nodes: u64,
    #[serde(default)]
    pub topology: TopologyKind,
    /// Link count for random topologies.
    pub edges: Option<usize>,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default)]
    pub prune: PruneMode,
    #[serde(default = "default_cycles")]
    pub cycles: u64,
    pub capacity: Option<usize>,
    #[serde(default)]
    pub hasher: HashAlgorithm,
    #[serde(default)]
    pub genesis_time: u64,
    #[serde(default = "default_tick")]
    pub tick: u64,
    #[serde(default = "default_readings")]
    pub readings_per_block: usize,
    #[serde(default = "default_reading_bytes")]
    pub reading_bytes: usize,
    #[serde(default)]
    pub failures: Vec<FailureEntry>,
    #[serde(default)]
    pub rogue: Vec<RogueEntry>,
    pub segmented: Option<SegmentedSection>,
}

impl ProtocolSection {
    pub fn failure_plan(&self) -> FailurePlan {
        let mut plan = FailurePlan::new();
        for f in &self.failures {
            for &it in &f.iterations {
                plan.insert(NodeId(f.node), it, f.kind);
            }
        }
        plan
    }

    pub fn rogue_proposals(&self) -> Vec<RogueProposal> {
        self.rogue
            .iter()
            .map(|r| RogueProposal {
                iteration: r.iteration,
                sender: NodeId(r.sender),
                targets: r.targets.iter().copied().map(NodeId).collect(),
            })
            .collect()
    }

    pub fn traffic(&self) -> Traffic {
        Traffic {
            readings_per_block: self.readings_per_block,
            reading_bytes: self.reading_bytes,
        }
    }
}

/// The on-disk experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub connectivity: Option<ConnectivitySection>,
    pub attack: Option<AttackSection>,
    pub chain: Option<ChainSection>,
    pub protocol: Option<ProtocolSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

/// Parses TOML text. Parse errors carry the line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))
}

fn check_positive(problems: &mut Vec<String>, field: &str, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        problems.push(format!("{field} must be a positive number, got {value}"));
    }
}

impl ExperimentConfig {
    /// Checks that `kind` has everything it needs. Every problem found is
    /// reported, not just the first.
    pub fn validate(&self, kind: ExperimentKind) -> Result<(), ConfigError> {
        let mut p = Vec::new();
        if let Some(k) = self.kind {
            if k != kind {
                p.push(format!("kind: config is for `{k}` but `{kind}` was requested"));
            }
        }
        if self.seed.is_none() {
            p.push("seed: a master seed is required".to_string());
        }
        let missing = |p: &mut Vec<String>| p.push(format!("[{}]: section is required for {kind}", kind.section()));
        match kind {
            ExperimentKind::Connectivity => match &self.connectivity {
                None => missing(&mut p),
                Some(c) => validate_connectivity(c, &mut p),
            },
            ExperimentKind::AttackSweep => match &self.attack {
                None => missing(&mut p),
                Some(a) => validate_attack(a, &mut p),
            },
            ExperimentKind::ChainReplay => match &self.chain {
                None => missing(&mut p),
                Some(c) => validate_chain(c, &mut p),
            },
            ExperimentKind::Protocol => match &self.protocol {
                None => missing(&mut p),
                Some(s) => validate_protocol(s, &mut p),
            },
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Validation(p))
        }
    }
}

fn validate_connectivity(c: &ConnectivitySection, p: &mut Vec<String>) {
    if c.trials == 0 {
        p.push("connectivity.trials must be at least 1".into());
    }
    for &n in &c.node_counts {
        if n == 0 {
            p.push("connectivity.node_counts: n must be at least 1".into());
            continue;
        }
        if let Some(ls) = &c.edge_counts {
            let lmax = max_edges(n);
            for &l in ls {
                if l > lmax {
                    p.push(format!(
                        "connectivity.edge_counts: L = {l} exceeds Lmax = n(n-1)/2 = {lmax} for n = {n}"
                    ));
                }
            }
        }
    }
    for m in &c.markers {
        if !(0.0..=1.0).contains(&m.fraction) {
            p.push(format!("connectivity.markers: fraction {} outside [0, 1]", m.fraction));
        }
    }
}

fn validate_attack(a: &AttackSection, p: &mut Vec<String>) {
    if a.line_nodes < 2 {
        p.push("attack.line_nodes must be at least 2".into());
    }
    check_positive(p, "attack.spacing", a.spacing);
    check_positive(p, "attack.radius", a.radius);
    if !(a.half_width.is_finite() && a.half_width >= 0.0) {
        p.push("attack.half_width must be non-negative".into());
    }
    if a.trials == 0 {
        p.push("attack.trials must be at least 1".into());
    }
    for &d in &a.densities {
        if !(d.is_finite() && d >= 0.0) {
            p.push(format!("attack.densities: {d} is not a non-negative density"));
        } else if d > 0.0 && a.half_width == 0.0 {
            p.push(format!("attack.densities: density {d} needs a positive half_width"));
        }
    }
    for &f in &a.fractions {
        if !(0.0..=1.0).contains(&f) {
            p.push(format!("attack.fractions: {f} outside [0, 1]"));
        }
    }
    if a.fractions.windows(2).any(|w| w[0] > w[1]) {
        p.push("attack.fractions must be sorted ascending".into());
    }
}

fn validate_chain(c: &ChainSection, p: &mut Vec<String>) {
    if c.capacity == 0 {
        p.push("chain.capacity must be at least 1".into());
    }
    if c.writers == Some(0) {
        p.push("chain.writers must be at least 1".into());
    }
    if c.readings_per_block == 0 {
        p.push("chain.readings_per_block must be at least 1".into());
    }
}

fn validate_protocol(s: &ProtocolSection, p: &mut Vec<String>) {
    if s.cycles == 0 {
        p.push("protocol.cycles must be at least 1".into());
    }
    if s.capacity == Some(0) {
        p.push("protocol.capacity must be at least 1".into());
    }
    if s.tick == 0 {
        p.push("protocol.tick must be at least 1".into());
    }
    if s.readings_per_block == 0 {
        p.push("protocol.readings_per_block must be at least 1".into());
    }
    if s.topology == TopologyKind::Segmented {
        match &s.segmented {
            None => p.push("protocol.segmented: section is required for a segmented topology".into()),
            Some(seg) => {
                if seg.hubs == 0 {
                    p.push("protocol.segmented.hubs must be at least 1".into());
                }
                if seg.overlap > 0 && seg.overlap >= seg.mobiles_per_segment {
                    p.push("protocol.segmented.overlap must be smaller than mobiles_per_segment".into());
                }
                if seg.rounds == 0 {
                    p.push("protocol.segmented.rounds must be at least 1".into());
                }
            }
        }
        return;
    }
    if s.nodes == 0 {
        p.push("protocol.nodes must be at least 1".into());
        return;
    }
    let n = s.nodes;
    match (s.topology, s.edges) {
        (TopologyKind::Random, None) => p.push("protocol.edges is required for a random topology".into()),
        (TopologyKind::Random, Some(l)) if l > max_edges(n as usize) => p.push(format!(
            "protocol.edges: L = {l} exceeds Lmax = n(n-1)/2 = {}",
            max_edges(n as usize)
        )),
        _ => {}
    }
    let turns = s.cycles * s.capacity.map_or(n, |c| c as u64);
    for f in &s.failures {
        if f.node == 0 || f.node > n {
            p.push(format!("protocol.failures: node {} is not in 1..={n}", f.node));
        }
        for &it in &f.iterations {
            if it == 0 || it > turns {
                p.push(format!("protocol.failures: iteration {it} is not in 1..={turns}"));
            }
        }
    }
    for r in &s.rogue {
        if r.iteration == 0 || r.iteration > turns {
            p.push(format!(
                "protocol.rogue: iteration {} is not in 1..={turns}",
                r.iteration
            ));
        } else if (r.iteration - 1) % n + 1 == r.sender {
            p.push(format!(
                "protocol.rogue: sender {} is the scheduled creator at iteration {}",
                r.sender, r.iteration
            ));
        }
        for &t in &r.targets {
            if t == 0 || t > n {
                p.push(format!("protocol.rogue: target {t} is not in 1..={n}"));
            }
        }
    }
}
