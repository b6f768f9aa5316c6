use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::events::{Action, Event, Outcome};
use super::finalize::{finalize_turns, LostBlock, ResultantChain};
use super::node::{Message, NodeState, NodeStatus, TurnContext};
use super::schedule::Schedule;
use super::ConsensusError;
use crate::chain::{assemble_full_chain, Block, FullChain, HashAlgorithm, LocalChain, NodeId, PruneMode, Transaction};

/// How a creator disseminates its new block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// (a) send the whole renewed window.
    FullChain,
    /// (b) send only the new block.
    #[default]
    SingleBlock,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "full_chain" => Ok(Variant::FullChain),
            "b" | "single_block" => Ok(Variant::SingleBlock),
            other => Err(format!("unknown variant `{other}` (expected full_chain|single_block)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Failed,
    Isolated,
}

impl From<FailureKind> for NodeStatus {
    fn from(kind: FailureKind) -> Self {
        match kind {
            FailureKind::Failed => NodeStatus::Failed,
            FailureKind::Isolated => NodeStatus::Isolated,
        }
    }
}

/// Which nodes are down or cut off at which iterations. Unlisted
/// iterations are Alive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailurePlan {
    plan: BTreeMap<NodeId, BTreeMap<u64, FailureKind>>,
}

impl FailurePlan {
    pub fn new() -> Self {
        FailurePlan::default()
    }

    pub fn with(mut self, node: NodeId, iterations: impl IntoIterator<Item = u64>, kind: FailureKind) -> Self {
        for it in iterations {
            self.insert(node, it, kind);
        }
        self
    }

    pub fn insert(&mut self, node: NodeId, iteration: u64, kind: FailureKind) {
        self.plan.entry(node).or_default().insert(iteration, kind);
    }

    pub fn status_at(&self, node: NodeId, iteration: u64) -> NodeStatus {
        self.plan
            .get(&node)
            .and_then(|its| its.get(&iteration))
            .map_or(NodeStatus::Alive, |&k| k.into())
    }

    pub fn is_empty(&self) -> bool {
        self.plan.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, u64, FailureKind)> + '_ {
        self.plan
            .iter()
            .flat_map(|(&node, its)| its.iter().map(move |(&it, &kind)| (node, it, kind)))
    }
}

/// A block pushed by a node that is not the scheduled creator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RogueProposal {
    pub iteration: u64,
    pub sender: NodeId,
    pub targets: Vec<NodeId>,
}

/// Synthetic sensor data each creator packs into its block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traffic {
    pub readings_per_block: usize,
    pub reading_bytes: usize,
}

impl Default for Traffic {
    fn default() -> Self {
        Traffic {
            readings_per_block: 4,
            reading_bytes: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub prune: PruneMode,
    pub cycles: u64,
    /// Blocks per cycle; defaults to the number of scheduled nodes.
    pub capacity: Option<usize>,
    pub hasher: HashAlgorithm,
    pub genesis_time: u64,
    /// Clock ticks between consecutive turns.
    pub tick: u64,
    pub failures: FailurePlan,
    pub rogue: Vec<RogueProposal>,
    pub traffic: Traffic,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            variant: Variant::default(),
            prune: PruneMode::default(),
            cycles: 1,
            capacity: None,
            hasher: HashAlgorithm::default(),
            genesis_time: 0,
            tick: 1,
            failures: FailurePlan::default(),
            rogue: Vec::new(),
            traffic: Traffic::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn capacity_for(&self, schedule: &Schedule) -> usize {
        self.capacity.unwrap_or(schedule.len())
    }

    /// Checks the configuration against a schedule and a turn range,
    /// collecting every problem.
    pub fn check(&self, schedule: &Schedule, turns: &RangeInclusive<u64>) -> Result<(), ConsensusError> {
        let mut problems = Vec::new();
        if self.cycles == 0 {
            problems.push("cycles must be at least 1".to_string());
        }
        if self.capacity == Some(0) {
            problems.push("capacity must be at least 1".to_string());
        }
        if self.tick == 0 {
            problems.push("tick must be at least 1".to_string());
        }
        if self.traffic.readings_per_block == 0 {
            problems.push("readings_per_block must be at least 1".to_string());
        }
        for (node, it, _) in self.failures.entries() {
            if schedule.entry(node).is_none() {
                problems.push(format!("failure plan names unknown node {node}"));
            }
            if !turns.contains(&it) {
                problems.push(format!(
                    "failure plan iteration {it} outside {}..={}",
                    turns.start(),
                    turns.end()
                ));
            }
        }
        for r in &self.rogue {
            if !turns.contains(&r.iteration) {
                problems.push(format!(
                    "rogue iteration {} outside {}..={}",
                    r.iteration,
                    turns.start(),
                    turns.end()
                ));
            } else if schedule.creator_for(r.iteration).node_id == r.sender {
                problems.push(format!(
                    "rogue sender {} is the scheduled creator at iteration {}",
                    r.sender, r.iteration
                ));
            }
            for t in &r.targets {
                if schedule.entry(*t).is_none() {
                    problems.push(format!("rogue target {t} is not in the schedule"));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConsensusError::Config(problems.join("; ")))
        }
    }
}

/// All node states plus the bookkeeping of a run in progress.
#[derive(Debug, Clone)]
pub struct Network {
    schedule: Schedule,
    config: ProtocolConfig,
    capacity: usize,
    nodes: Vec<NodeState>,
    events: Vec<Event>,
    bytes_per_iteration: Vec<u64>,
    chain_lengths: Vec<Vec<usize>>,
}

impl Network {
    /// Every scheduled node starts from the same one-block window `head`
    /// and trusts exactly the scheduled ids.
    pub fn new(schedule: Schedule, config: ProtocolConfig, head: Block) -> Result<Self, ConsensusError> {
        let capacity = config.capacity_for(&schedule);
        let window = LocalChain::new(head, capacity, config.hasher)?;
        let registry: BTreeSet<NodeId> = schedule.node_ids().collect();
        let nodes = schedule
            .node_ids()
            .map(|id| NodeState::new(id, window.clone(), registry.clone()))
            .collect();
        Ok(Network {
            schedule,
            config,
            capacity,
            nodes,
            events: Vec::new(),
            bytes_per_iteration: Vec::new(),
            chain_lengths: Vec::new(),
        })
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeState> {
        self.schedule.position(id).map(|i| &self.nodes[i])
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn idx(&self, id: NodeId) -> Option<usize> {
        self.schedule.position(id)
    }

    fn alive_neighbors(&self, i: usize) -> Vec<usize> {
        self.schedule.entries()[i]
            .neighbor_ids
            .iter()
            .filter_map(|&id| self.idx(id))
            .filter(|&j| self.nodes[j].status == NodeStatus::Alive)
            .collect()
    }

    /// Restores each listed node from its Alive neighbors' windows as they
    /// stood before any of them was restored.
    fn recover_all(&mut self, iteration: u64, who: &[usize]) {
        let snapshot: Vec<LocalChain> = self.nodes.iter().map(|n| n.local_chain.clone()).collect();
        for &i in who {
            let neighbors: Vec<&LocalChain> = self.alive_neighbors(i).into_iter().map(|j| &snapshot[j]).collect();
            let id = self.nodes[i].node_id;
            match self.nodes[i].recover(&neighbors) {
                Ok(adopted) => self
                    .events
                    .push(Event::new(iteration, id, Action::Recover, Outcome::Ok).reason(format!("adopted {adopted}"))),
                Err(e) => {
                    self.nodes[i].status = NodeStatus::Alive;
                    self.events
                        .push(Event::new(iteration, id, Action::Recover, Outcome::Rejected).reason(e));
                }
            }
        }
    }

    fn synthetic_transactions<R: Rng + ?Sized>(
        &self,
        creator: NodeId,
        created_at: u64,
        rng: &mut R,
    ) -> Vec<Transaction> {
        let traffic = self.config.traffic;
        let readings = (0..traffic.readings_per_block)
            .map(|_| {
                let mut reading = vec![0u8; traffic.reading_bytes];
                rng.fill(reading.as_mut_slice());
                reading
            })
            .collect();
        vec![Transaction::series(creator.0, created_at, 1, readings).expect("readings are non-empty")]
    }

    fn message_for(&self, sender: usize, block: Block) -> Message {
        match self.config.variant {
            Variant::SingleBlock => Message::Block(block),
            Variant::FullChain => Message::Chain(self.nodes[sender].local_chain.blocks().to_vec()),
        }
    }

    /// Delivers one transmission and records it. Returns the bytes sent.
    fn transmit(&mut self, iteration: u64, sender: NodeId, target: usize, message: &Message, action: Action) -> u64 {
        let target_id = self.nodes[target].node_id;
        if self.nodes[target].status != NodeStatus::Alive {
            self.events
                .push(Event::new(iteration, sender, action, Outcome::Unreachable).target(target_id));
            return 0;
        }
        let bytes = message.encoded_len() as u64;
        if let Some(s) = self.idx(sender) {
            let c = &mut self.nodes[s].counters;
            c.bytes_sent += bytes;
            c.messages_sent += 1;
        }
        self.events.push(
            Event::new(iteration, sender, action, Outcome::Ok)
                .target(target_id)
                .bytes(bytes),
        );
        let ctx = TurnContext {
            iteration,
            scheduled_creator: self.schedule.creator_for(iteration).node_id,
        };
        let prune = self.config.prune;
        let node = &mut self.nodes[target];
        node.counters.bytes_received += bytes;
        node.counters.messages_received += 1;
        let verdict = node.handle_incoming(message, sender, ctx, prune);
        let event = Event::new(iteration, target_id, Action::Receive, Outcome::Accepted)
            .target(sender)
            .bytes(bytes);
        self.events.push(match verdict {
            Ok(()) => event,
            Err(reason) => Event {
                outcome: Outcome::Rejected,
                ..event.reason(reason)
            },
        });
        bytes
    }

    /// One scheduled turn: status changes, recovery of returning nodes,
    /// block creation by the scheduled node and dissemination, then any
    /// rogue proposals for this turn.
    pub fn step<R: Rng + ?Sized>(&mut self, iteration: u64, rng: &mut R) {
        let mut returning = Vec::new();
        for i in 0..self.nodes.len() {
            let id = self.nodes[i].node_id;
            let next = self.config.failures.status_at(id, iteration);
            let prev = self.nodes[i].status;
            if next != prev {
                let outcome = match next {
                    NodeStatus::Alive => Outcome::Alive,
                    NodeStatus::Failed => Outcome::Failed,
                    NodeStatus::Isolated => Outcome::Isolated,
                };
                self.events.push(Event::new(iteration, id, Action::Status, outcome));
                if next == NodeStatus::Alive {
                    returning.push(i);
                }
            }
            self.nodes[i].status = next;
        }
        self.recover_all(iteration, &returning);

        let mut bytes = 0;
        let creator_entry = self.schedule.creator_for(iteration).clone();
        let c = self.idx(creator_entry.node_id).expect("creator is scheduled");
        let created_at = self.config.genesis_time + iteration * self.config.tick;
        match self.nodes[c].status {
            NodeStatus::Failed => {
                self.events.push(Event::new(
                    iteration,
                    creator_entry.node_id,
                    Action::Skip,
                    Outcome::Failed,
                ));
            }
            status => {
                let txs = self.synthetic_transactions(creator_entry.node_id, created_at, rng);
                let block = self.nodes[c]
                    .local_chain
                    .next_block(creator_entry.node_id, created_at, iteration, txs);
                let prune = self.config.prune;
                match self.nodes[c].local_chain.push(block.clone(), prune) {
                    Err(e) => {
                        self.events.push(
                            Event::new(iteration, creator_entry.node_id, Action::Skip, Outcome::Rejected).reason(e),
                        );
                    }
                    Ok(_) => {
                        self.events.push(
                            Event::new(iteration, creator_entry.node_id, Action::Create, Outcome::Ok)
                                .bytes(block.encoded_len() as u64),
                        );
                        if status == NodeStatus::Alive {
                            let message = self.message_for(c, block);
                            for n in &creator_entry.neighbor_ids {
                                if let Some(t) = self.idx(*n) {
                                    bytes += self.transmit(iteration, creator_entry.node_id, t, &message, Action::Send);
                                }
                            }
                        }
                    }
                }
            }
        }

        let rogues: Vec<RogueProposal> = self
            .config
            .rogue
            .iter()
            .filter(|r| r.iteration == iteration)
            .cloned()
            .collect();
        for r in rogues {
            let sender = self.idx(r.sender);
            if sender.is_some_and(|s| self.nodes[s].status != NodeStatus::Alive) {
                continue;
            }
            let Some(base) = sender.or_else(|| r.targets.first().and_then(|&t| self.idx(t))) else {
                continue;
            };
            // Fixed payload so rogue traffic never perturbs the random stream.
            let txs = vec![Transaction::single(r.sender.0, created_at, vec![0xee])];
            let block = self.nodes[base]
                .local_chain
                .next_block(r.sender, created_at, iteration, txs);
            let message = match self.config.variant {
                Variant::SingleBlock => Message::Block(block),
                Variant::FullChain => {
                    let mut blocks = self.nodes[base].local_chain.blocks().to_vec();
                    blocks.push(block);
                    Message::Chain(blocks)
                }
            };
            for t in &r.targets {
                if let Some(t) = self.idx(*t) {
                    bytes += self.transmit(iteration, r.sender, t, &message, Action::Rogue);
                }
            }
        }

        self.bytes_per_iteration.push(bytes);
        self.chain_lengths
            .push(self.nodes.iter().map(|n| n.local_chain.len()).collect());
    }

    /// Finalizes a cycle, brings stale Alive nodes back in line with the
    /// result, and under reset pruning rolls every live window over unless
    /// this is the last cycle.
    pub fn close_cycle(&mut self, turns: RangeInclusive<u64>, head: Block, last: bool) -> ResultantChain {
        let end = *turns.end();
        let result = finalize_turns(
            &self.nodes,
            turns,
            &self.schedule,
            head,
            self.capacity as u64,
            self.config.hasher,
        );
        for (block, &tally) in result.accepted.iter().zip(&result.confirmations) {
            self.events.push(
                Event::new(
                    block.header.global_index,
                    block.header.creator_id,
                    Action::Finalize,
                    Outcome::Accepted,
                )
                .reason(format!("{tally}/{}", result.live_count)),
            );
        }
        for lost in &result.lost {
            self.events.push(
                Event::new(lost.global_index, lost.creator_id, Action::Finalize, Outcome::Lost)
                    .reason(format!("{}/{}", lost.best_tally, result.live_count)),
            );
        }

        let tip = result.tip().header.hash;
        let stale: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| {
                self.nodes[i].status == NodeStatus::Alive && self.nodes[i].local_chain.tip().header.hash != tip
            })
            .collect();
        self.recover_all(end, &stale);

        if self.config.prune == PruneMode::Reset && !last {
            for node in self.nodes.iter_mut().filter(|n| n.is_live()) {
                let deleted = node.local_chain.roll_over();
                self.events.push(
                    Event::new(end, node.node_id, Action::Prune, Outcome::Ok)
                        .reason(format!("deleted {}", deleted.len())),
                );
            }
        }
        result
    }

    /// Runs `cycles` cycles of `capacity` turns starting at `first_turn`.
    pub(crate) fn run_cycles<R: Rng + ?Sized>(
        &mut self,
        first_turn: u64,
        cycles: u64,
        rng: &mut R,
    ) -> Vec<ResultantChain> {
        let cap = self.capacity as u64;
        let mut head = self.nodes[0].local_chain.head().clone();
        let mut results = Vec::new();
        for cycle in 0..cycles {
            let start = first_turn + cycle * cap;
            let end = start + cap - 1;
            for turn in start..=end {
                self.step(turn, rng);
            }
            let result = self.close_cycle(start..=end, head, cycle + 1 == cycles);
            head = result.tip().as_carry_over(cap);
            results.push(result);
        }
        results
    }

    pub(crate) fn into_parts(self) -> (Vec<NodeState>, Vec<Event>, Vec<u64>, Vec<Vec<usize>>) {
        (self.nodes, self.events, self.bytes_per_iteration, self.chain_lengths)
    }
}

/// Everything a protocol run produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    /// One finalized record per cycle.
    pub records: Vec<ResultantChain>,
    pub full_chain: FullChain,
    /// Final node states in schedule order.
    pub nodes: Vec<NodeState>,
    /// Bytes transmitted during each iteration, first iteration at index 0.
    pub bytes_per_iteration: Vec<u64>,
    /// Window length of every node after each iteration.
    pub chain_lengths: Vec<Vec<usize>>,
    pub events: Vec<Event>,
}

impl RunOutcome {
    pub fn lost(&self) -> Vec<LostBlock> {
        self.records.iter().flat_map(|r| r.lost.iter().copied()).collect()
    }

    pub fn accepted_count(&self) -> usize {
        self.records.iter().map(|r| r.accepted.len()).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes_per_iteration.iter().sum()
    }

    pub fn cumulative_bytes(&self) -> Vec<u64> {
        self.bytes_per_iteration
            .iter()
            .scan(0u64, |acc, &b| {
                *acc += b;
                Some(*acc)
            })
            .collect()
    }
}

pub(crate) fn stitch(
    records: &[ResultantChain],
    capacity: u64,
    hasher: HashAlgorithm,
) -> Result<FullChain, ConsensusError> {
    Ok(assemble_full_chain(
        records.iter().map(ResultantChain::blocks).collect(),
        capacity,
        hasher,
    )?)
}

/// Runs the full protocol from a fresh genesis: `cycles * capacity` turns,
/// finalization and pruning at every cycle boundary.
pub fn run_protocol<R: Rng + ?Sized>(
    schedule: &Schedule,
    config: &ProtocolConfig,
    rng: &mut R,
) -> Result<RunOutcome, ConsensusError> {
    let capacity = config.capacity_for(schedule);
    let last_turn = config.cycles.saturating_mul(capacity as u64);
    config.check(schedule, &(1..=last_turn.max(1)))?;
    let genesis = Block::genesis(config.genesis_time, config.hasher);
    let mut network = Network::new(schedule.clone(), config.clone(), genesis)?;
    let records = network.run_cycles(1, config.cycles, rng);
    let full_chain = stitch(&records, capacity as u64, config.hasher)?;
    let (nodes, events, bytes_per_iteration, chain_lengths) = network.into_parts();
    Ok(RunOutcome {
        records,
        full_chain,
        nodes,
        bytes_per_iteration,
        chain_lengths,
        events,
    })
}
