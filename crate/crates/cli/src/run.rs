use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollchain_core::chain::codec::encode_chain;
use rollchain_core::chain::hash::to_hex;
use rollchain_core::chain::{
    assemble_full_chain, validate_chain, Block, HashAlgorithm, LocalChain, NodeId, PruneMode, Transaction,
};
use rollchain_core::consensus::{
    events::write_ndjson, run_protocol, run_segmented, Event, ProtocolConfig, ResultantChain, Schedule,
};
use rollchain_core::netsim::seeds::stream_rng;
use rollchain_core::netsim::{
    attack_sweep, connectivity_sweep, gen_random_graph, gen_segmented_topology, AttackSweep, ConnectivitySweep, Graph,
};
use serde::Serialize;

use crate::config::{
    AttackSection, ChainSection, ConfigError, ConnectivitySection, ExperimentConfig, ExperimentKind, Format,
    ProtocolSection, TopologyKind,
};
use crate::report::{extension, Cell, Table};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Worker threads for Monte Carlo trials; results do not depend on it.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_hash: String,
    /// The effective configuration, overrides applied.
    pub config: ExperimentConfig,
    pub files: Vec<String>,
    pub started_unix: u64,
}

pub const DEFAULT_OUT: &str = "results";

/// Applies overrides, validates, and fixes the seed.
pub fn effective_config(
    mut config: ExperimentConfig,
    kind: ExperimentKind,
    opts: &RunOptions,
) -> Result<ExperimentConfig, ConfigError> {
    if opts.seed.is_some() {
        config.seed = opts.seed;
    }
    if opts.out.is_some() {
        config.out = opts.out.clone();
    }
    if opts.format.is_some() {
        config.format = opts.format;
    }
    config.validate(kind)?;
    config.kind = Some(kind);
    Ok(config)
}

/// First 12 hex digits of SHA-256 over the canonical JSON of the config,
/// with the output directory left out.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut hashed = config.clone();
    hashed.out = None;
    let json = serde_json::to_vec(&hashed).expect("config serializes");
    to_hex(&HashAlgorithm::Sha256.digest(&json))[..12].to_string()
}

/// Output files of a run, computed in memory before anything is written.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn table(&mut self, stem: &str, hash: &str, format: Format, table: &Table) {
        self.files
            .push((format!("{stem}-{hash}.{}", extension(format)), table.render(format)));
    }

    fn raw(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }
}

/// Validates, runs and writes one experiment. Nothing is written if the
/// configuration is invalid or the experiment fails.
pub fn run_experiment(config: ExperimentConfig, kind: ExperimentKind, opts: &RunOptions) -> Result<RunManifest> {
    let config = effective_config(config, kind, opts)?;
    let seed = config.seed.expect("validated");
    let format = config.format.unwrap_or_default();
    let hash = config_hash(&config);
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());

    let compute = || -> Result<Outputs> {
        let mut out = Outputs::new();
        match kind {
            ExperimentKind::Connectivity => {
                connectivity(config.connectivity.as_ref().unwrap(), seed, &hash, format, &mut out)?
            }
            ExperimentKind::AttackSweep => attack(config.attack.as_ref().unwrap(), seed, &hash, format, &mut out)?,
            ExperimentKind::ChainReplay => chain_replay(config.chain.as_ref().unwrap(), seed, &hash, format, &mut out)?,
            ExperimentKind::Protocol => protocol(config.protocol.as_ref().unwrap(), seed, &hash, format, &mut out)?,
        }
        Ok(out)
    };
    let outputs = match opts.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .context("building the worker pool")?
            .install(compute)?,
        None => compute()?,
    };

    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind,
        seed,
        config_hash: hash.clone(),
        config,
        files: outputs.files.iter().map(|(name, _)| name.clone()).collect(),
        started_unix,
    };
    write_outputs(&dir, &hash, &manifest, &outputs)?;
    Ok(manifest)
}

fn write_outputs(dir: &Path, hash: &str, manifest: &RunManifest, outputs: &Outputs) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    let manifest_path = dir.join(format!("manifest-{hash}.json"));
    fs::write(&manifest_path, json).with_context(|| format!("writing {}", manifest_path.display()))?;
    for (name, bytes) in &outputs.files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn connectivity(c: &ConnectivitySection, seed: u64, hash: &str, format: Format, out: &mut Outputs) -> Result<()> {
    let sweep = ConnectivitySweep {
        node_counts: c.node_counts.clone(),
        edge_counts: c.edge_counts.clone(),
        trials: c.trials,
        model: c.model,
        markers: c.markers.iter().map(|m| (m.n, m.fraction)).collect(),
    };
    let report = connectivity_sweep(&sweep, seed)?;
    let mut rows = Table::new(&["n", "L", "trials", "p_hat", "stderr", "seed"]);
    for r in &report.rows {
        rows.push(vec![
            r.n.into(),
            r.l.into(),
            r.trials.into(),
            r.p_hat.into(),
            r.stderr.into(),
            r.seed.into(),
        ]);
    }
    let mut markers = Table::new(&["n", "lmax", "fraction", "L"]);
    for m in &report.markers {
        markers.push(vec![m.n.into(), m.lmax.into(), m.fraction.into(), m.l.into()]);
    }
    out.table("connectivity", hash, format, &rows);
    out.table("connectivity-markers", hash, format, &markers);
    Ok(())
}

fn attack(a: &AttackSection, seed: u64, hash: &str, format: Format, out: &mut Outputs) -> Result<()> {
    let sweep = AttackSweep {
        deployment: a.deployment(),
        densities: a.densities.clone(),
        fractions: a.fractions.clone(),
        trials: a.trials,
        removal: a.removal,
    };
    let report = attack_sweep(&sweep, seed)?;
    let mut rows = Table::new(&[
        "density",
        "f",
        "trials",
        "p_hat",
        "stderr",
        "mean_spl",
        "mean_stretch",
        "seed",
    ]);
    for r in &report.rows {
        rows.push(vec![
            r.density.into(),
            r.fraction.into(),
            r.trials.into(),
            r.p_hat.into(),
            r.stderr.into(),
            r.mean_spl.into(),
            r.mean_stretch.into(),
            r.seed.into(),
        ]);
    }
    let mut breakdown = Table::new(&["density", "breakdown_f"]);
    for &d in &a.densities {
        breakdown.push(vec![d.into(), report.breakdown_fraction(d).into()]);
    }
    out.table("attack", hash, format, &rows);
    out.table("attack-breakdown", hash, format, &breakdown);
    Ok(())
}

fn synthetic_tx<R: Rng>(sensor: u64, t0: u64, readings: usize, bytes: usize, rng: &mut R) -> Vec<Transaction> {
    let readings = (0..readings)
        .map(|_| {
            let mut r = vec![0u8; bytes];
            rng.fill(r.as_mut_slice());
            r
        })
        .collect();
    vec![Transaction::series(sensor, t0, 1, readings).expect("readings are non-empty")]
}

fn chain_replay(c: &ChainSection, seed: u64, hash: &str, format: Format, out: &mut Outputs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let writers = c.writers.unwrap_or(c.capacity as u64);
    let genesis = Block::genesis(c.genesis_time, c.hasher);
    let mut reference = LocalChain::new(genesis.clone(), usize::MAX / 2, c.hasher)?;
    let mut window = LocalChain::new(genesis, c.capacity, c.hasher)?;
    let mut records: Vec<Vec<Block>> = Vec::new();
    for g in 1..=c.blocks {
        if c.prune == PruneMode::Reset && window.len() == c.capacity + 1 {
            records.push(window.blocks().to_vec());
            window.prune_reset()?;
        }
        let creator = (g - 1) % writers + 1;
        let created_at = c.genesis_time + g;
        let txs = synthetic_tx(creator, created_at, c.readings_per_block, c.reading_bytes, &mut rng);
        let block = window.next_block(NodeId(creator), created_at, g, txs);
        reference.append(block.clone())?;
        window.push(block, c.prune)?;
    }

    let window_valid = validate_chain(&window).is_empty();
    let hashes = |blocks: &mut dyn Iterator<Item = &Block>| blocks.map(|b| b.header.hash).collect::<Vec<_>>();
    let (cycles, full_valid, matches) = match c.prune {
        PruneMode::Reset => {
            records.push(window.blocks().to_vec());
            let cycles = records.len();
            let full = assemble_full_chain(records, c.capacity as u64, c.hasher)?;
            let matches = hashes(&mut full.blocks()) == hashes(&mut reference.blocks().iter());
            (cycles, Some(validate_chain(&full).is_empty()), matches)
        }
        PruneMode::Sliding => {
            let tail = &reference.blocks()[reference.len() - window.len()..];
            (0, None, hashes(&mut window.blocks().iter()) == hashes(&mut tail.iter()))
        }
    };

    let retained: Vec<_> = window.blocks().iter().map(|b| b.header.hash).collect();
    let mut blocks = Table::new(&[
        "global_index",
        "cycle_index",
        "index_in_cycle",
        "creator_id",
        "created_at",
        "tx_count",
        "hash",
        "prev_hash",
        "retained",
    ]);
    for b in reference.blocks() {
        let h = &b.header;
        // Report the bookkeeping the rolling chain assigns, not the
        // unbounded reference's.
        let (cycle, index) = rollchain_core::chain::block::slot_of(h.global_index, c.capacity as u64);
        blocks.push(vec![
            h.global_index.into(),
            cycle.into(),
            index.into(),
            h.creator_id.0.into(),
            h.created_at.into(),
            b.transactions.len().into(),
            to_hex(&h.hash).into(),
            to_hex(&h.prev_hash).into(),
            retained.contains(&h.hash).into(),
        ]);
    }
    let mut summary = Table::new(&[
        "blocks",
        "capacity",
        "prune",
        "window_len",
        "cycles",
        "window_valid",
        "full_chain_valid",
        "matches_reference",
    ]);
    summary.push(vec![
        c.blocks.into(),
        c.capacity.into(),
        prune_name(c.prune).into(),
        window.len().into(),
        cycles.into(),
        window_valid.into(),
        full_valid.into(),
        matches.into(),
    ]);
    out.table("chain", hash, format, &blocks);
    out.table("chain-summary", hash, format, &summary);
    out.raw(format!("chain-window-{hash}.rbc"), encode_chain(window.blocks()));
    Ok(())
}

fn prune_name(mode: PruneMode) -> &'static str {
    match mode {
        PruneMode::Reset => "reset",
        PruneMode::Sliding => "sliding",
    }
}

fn protocol_config(s: &ProtocolSection) -> ProtocolConfig {
    ProtocolConfig {
        variant: s.variant,
        prune: s.prune,
        cycles: s.cycles,
        capacity: s.capacity,
        hasher: s.hasher,
        genesis_time: s.genesis_time,
        tick: s.tick,
        failures: s.failure_plan(),
        rogue: s.rogue_proposals(),
        traffic: s.traffic(),
    }
}

fn resultant_table(records: &[ResultantChain]) -> Table {
    let mut t = Table::new(&["global_index", "creator_id", "status", "tally", "live_count", "hash"]);
    let mut rows: Vec<(u64, Vec<Cell>)> = Vec::new();
    for r in records {
        for (b, &tally) in r.accepted.iter().zip(&r.confirmations) {
            rows.push((
                b.header.global_index,
                vec![
                    b.header.global_index.into(),
                    b.header.creator_id.0.into(),
                    "accepted".into(),
                    tally.into(),
                    r.live_count.into(),
                    to_hex(&b.header.hash).into(),
                ],
            ));
        }
        for l in &r.lost {
            rows.push((
                l.global_index,
                vec![
                    l.global_index.into(),
                    l.creator_id.0.into(),
                    "lost".into(),
                    l.best_tally.into(),
                    r.live_count.into(),
                    Cell::Empty,
                ],
            ));
        }
    }
    rows.sort_by_key(|(g, _)| *g);
    for (_, row) in rows {
        t.push(row);
    }
    t
}

fn bytes_table(bytes: &[u64], creators: &dyn Fn(u64) -> Option<u64>) -> Table {
    let mut t = Table::new(&["iteration", "creator", "bytes", "cumulative_bytes"]);
    let mut total = 0;
    for (k, &b) in bytes.iter().enumerate() {
        total += b;
        let it = k as u64 + 1;
        t.push(vec![it.into(), creators(it).into(), b.into(), total.into()]);
    }
    t
}

fn events_bytes(events: &[Event]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_ndjson(&mut buf, events)?;
    Ok(buf)
}

fn protocol(s: &ProtocolSection, seed: u64, hash: &str, format: Format, out: &mut Outputs) -> Result<()> {
    let config = protocol_config(s);
    let mut topo_rng = stream_rng(seed, 0);
    let mut run_rng = stream_rng(seed, 1);
    let mut summary = Table::new(&["accepted", "lost", "full_chain_len", "full_chain_valid", "total_bytes"]);

    if s.topology == TopologyKind::Segmented {
        let seg = s.segmented.as_ref().expect("validated");
        let topology = gen_segmented_topology(seg.hubs, seg.mobiles_per_segment, seg.overlap, &mut topo_rng)?;
        let outcome = run_segmented(&topology, &config, seg.rounds, &mut run_rng)?;
        let created = |it: u64| -> Option<u64> {
            outcome
                .records
                .iter()
                .flat_map(|r| r.accepted.iter())
                .find(|b| b.header.global_index == it)
                .map(|b| b.header.creator_id.0)
        };
        out.table(
            "protocol-iterations",
            hash,
            format,
            &bytes_table(&outcome.bytes_per_iteration, &created),
        );
        out.table("protocol-resultant", hash, format, &resultant_table(&outcome.records));
        let mut handoffs = Table::new(&["round", "from_segment", "to_segment", "carrier", "global_index"]);
        for h in &outcome.handoffs {
            handoffs.push(vec![
                h.round.into(),
                h.from_segment.into(),
                h.to_segment.into(),
                h.carrier.0.into(),
                h.global_index.into(),
            ]);
        }
        out.table("protocol-handoffs", hash, format, &handoffs);
        let accepted: usize = outcome.records.iter().map(|r| r.accepted.len()).sum();
        summary.push(vec![
            accepted.into(),
            outcome.lost().len().into(),
            outcome.full_chain.len().into(),
            validate_chain(&outcome.full_chain).is_empty().into(),
            outcome.bytes_per_iteration.iter().sum::<u64>().into(),
        ]);
        out.table("protocol-summary", hash, format, &summary);
        out.raw(format!("events-{hash}.ndjson"), events_bytes(&outcome.events)?);
        return Ok(());
    }

    let n = s.nodes as usize;
    let graph = match s.topology {
        TopologyKind::Complete => Graph::complete(n),
        TopologyKind::Ring => Graph::ring(n),
        TopologyKind::Path => Graph::path(n),
        TopologyKind::Random => gen_random_graph(n, s.edges.expect("validated"), &mut topo_rng)?,
        TopologyKind::Segmented => unreachable!(),
    };
    let ids: Vec<NodeId> = (1..=s.nodes).map(NodeId).collect();
    let schedule = Schedule::build(&ids, &graph)?;
    let outcome = run_protocol(&schedule, &config, &mut run_rng)?;

    let creator = |it: u64| Some(schedule.creator_for(it).node_id.0);
    out.table(
        "protocol-iterations",
        hash,
        format,
        &bytes_table(&outcome.bytes_per_iteration, &creator),
    );
    out.table("protocol-resultant", hash, format, &resultant_table(&outcome.records));
    let mut nodes = Table::new(&[
        "node_id",
        "status",
        "window_len",
        "tip_index",
        "bytes_sent",
        "bytes_received",
        "messages_sent",
        "messages_received",
    ]);
    for node in &outcome.nodes {
        let status = serde_json::to_value(node.status)?;
        nodes.push(vec![
            node.node_id.0.into(),
            status.as_str().unwrap_or_default().into(),
            node.local_chain.len().into(),
            node.local_chain.tip().header.global_index.into(),
            node.counters.bytes_sent.into(),
            node.counters.bytes_received.into(),
            node.counters.messages_sent.into(),
            node.counters.messages_received.into(),
        ]);
    }
    out.table("protocol-nodes", hash, format, &nodes);
    summary.push(vec![
        outcome.accepted_count().into(),
        outcome.lost().len().into(),
        outcome.full_chain.len().into(),
        validate_chain(&outcome.full_chain).is_empty().into(),
        outcome.total_bytes().into(),
    ]);
    out.table("protocol-summary", hash, format, &summary);
    out.raw(format!("events-{hash}.ndjson"), events_bytes(&outcome.events)?);
    Ok(())
}
