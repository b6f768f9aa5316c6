use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::deployment::{gen_linear_deployment, DeploymentParams};
use super::graph::{bfs_distance, shortest_path_length, Graph};
use super::montecarlo::Estimate;
use super::seeds::{derive_seed, stream_rng};
use super::NetsimError;

/// Number of links a removal fraction takes out of `edges`: `f * edges`
/// rounded half up.
pub fn removal_count(fraction: f64, edges: usize) -> usize {
    ((fraction * edges as f64 + 0.5).floor() as usize).min(edges)
}

fn check_fraction(fraction: f64) -> Result<(), NetsimError> {
    if (0.0..=1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(NetsimError::InvalidFraction(fraction))
    }
}

/// Removes `removal_count(fraction, |E|)` links chosen uniformly without
/// replacement. Nodes and layout are kept.
pub fn remove_links<R: Rng + ?Sized>(graph: &Graph, fraction: f64, rng: &mut R) -> Result<Graph, NetsimError> {
    check_fraction(fraction)?;
    let m = graph.edge_count();
    let mut removed = vec![false; m];
    for id in index::sample(rng, m, removal_count(fraction, m)) {
        removed[id] = true;
    }
    Ok(graph.filter_edges(|id| !removed[id]))
}

/// One random ordering of a graph's links, shared by every removal
/// fraction: fraction `f` removes the first `removal_count(f, |E|)` links in
/// the order. Path existence is then monotone in `f` for a fixed ordering.
pub struct CoupledRemoval<'g> {
    graph: &'g Graph,
    /// Position of each edge id in the removal order.
    rank: Vec<usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<'g> CoupledRemoval<'g> {
    pub fn new<R: Rng + ?Sized>(graph: &'g Graph, rng: &mut R) -> Self {
        let m = graph.edge_count();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        let mut rank = vec![0; m];
        for (pos, &id) in order.iter().enumerate() {
            rank[id] = pos;
        }
        let mut adjacency = vec![Vec::new(); graph.node_count()];
        for (id, &(a, b)) in graph.edges().iter().enumerate() {
            adjacency[a].push((b, id));
            adjacency[b].push((a, id));
        }
        CoupledRemoval { graph, rank, adjacency }
    }

    pub fn shortest_path_length(&self, fraction: f64, from: usize, to: usize) -> Option<usize> {
        let cut = removal_count(fraction, self.rank.len());
        bfs_distance(self.graph.node_count(), from, to, |v| {
            self.adjacency[v]
                .iter()
                .filter(move |&&(_, id)| self.rank[id] >= cut)
                .map(|&(w, _)| w)
        })
    }

    pub fn attacked_graph(&self, fraction: f64) -> Graph {
        let cut = removal_count(fraction, self.rank.len());
        self.graph.filter_edges(|id| self.rank[id] >= cut)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalMode {
    /// One removal order per trial shared across fractions.
    #[default]
    Coupled,
    /// A fresh removal set for every fraction.
    Independent,
}

impl FromStr for RemovalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coupled" => Ok(RemovalMode::Coupled),
            "independent" => Ok(RemovalMode::Independent),
            other => Err(format!("unknown removal mode `{other}` (expected coupled|independent)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSweep {
    /// Deployment geometry; `extra_density` is overridden per density.
    pub deployment: DeploymentParams,
    pub densities: Vec<f64>,
    pub fractions: Vec<f64>,
    pub trials: u64,
    pub removal: RemovalMode,
}

impl AttackSweep {
    pub fn check(&self) -> Result<(), NetsimError> {
        if self.trials == 0 {
            return Err(NetsimError::NoTrials);
        }
        for &f in &self.fractions {
            check_fraction(f)?;
        }
        if self.fractions.windows(2).any(|w| w[0] > w[1]) {
            return Err(NetsimError::Config("removal fractions must be sorted ascending".into()));
        }
        for &density in &self.densities {
            DeploymentParams {
                extra_density: density,
                ..self.deployment
            }
            .check()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub density: f64,
    #[serde(rename = "f")]
    pub fraction: f64,
    pub trials: u64,
    pub p_hat: f64,
    pub stderr: f64,
    /// Mean A-B hop count over trials where a path survived.
    pub mean_spl: Option<f64>,
    /// Mean ratio of attacked to unattacked hop count, over trials where
    /// both are finite.
    pub mean_stretch: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSweepReport {
    pub rows: Vec<AttackRow>,
}

impl AttackSweepReport {
    pub fn rows_for(&self, density: f64) -> impl Iterator<Item = &AttackRow> + '_ {
        self.rows.iter().filter(move |r| r.density == density)
    }

    /// Smallest removal fraction whose path probability is below one half.
    pub fn breakdown_fraction(&self, density: f64) -> Option<f64> {
        self.rows_for(density).find(|r| r.p_hat < 0.5).map(|r| r.fraction)
    }
}

/// Per-trial outcome: unattacked hop count and hop count at each fraction.
struct TrialOutcome {
    baseline: Option<usize>,
    attacked: Vec<Option<usize>>,
}

fn run_trial(
    sweep: &AttackSweep,
    params: &DeploymentParams,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome, NetsimError> {
    let mut rng = stream_rng(seed, trial);
    let deployment = gen_linear_deployment(params, &mut rng)?;
    let graph = &deployment.graph;
    let baseline = shortest_path_length(graph, deployment.a, deployment.b);
    let attacked = match sweep.removal {
        RemovalMode::Coupled => {
            let removal = CoupledRemoval::new(graph, &mut rng);
            sweep
                .fractions
                .iter()
                .map(|&f| removal.shortest_path_length(f, deployment.a, deployment.b))
                .collect()
        }
        RemovalMode::Independent => sweep
            .fractions
            .iter()
            .map(|&f| remove_links(graph, f, &mut rng).map(|g| shortest_path_length(&g, deployment.a, deployment.b)))
            .collect::<Result<_, _>>()?,
    };
    Ok(TrialOutcome { baseline, attacked })
}

/// Monte Carlo link-removal sweep over deployment densities and removal
/// fractions. Every trial regenerates the deployment from its own stream.
pub fn attack_sweep(sweep: &AttackSweep, seed: u64) -> Result<AttackSweepReport, NetsimError> {
    sweep.check()?;
    let mut rows = Vec::new();
    for &density in &sweep.densities {
        let params = DeploymentParams {
            extra_density: density,
            ..sweep.deployment
        };
        let cell_seed = derive_seed(seed, &[density.to_bits()]);
        let outcomes: Vec<TrialOutcome> = (0..sweep.trials)
            .into_par_iter()
            .map(|trial| run_trial(sweep, &params, cell_seed, trial))
            .collect::<Result<_, _>>()?;

        for (i, &fraction) in sweep.fractions.iter().enumerate() {
            let mut successes = 0u64;
            let mut spl_sum = 0.0;
            let mut stretch_sum = 0.0;
            let mut stretch_count = 0u64;
            for outcome in &outcomes {
                if let Some(len) = outcome.attacked[i] {
                    successes += 1;
                    spl_sum += len as f64;
                    if let Some(base) = outcome.baseline.filter(|&b| b > 0) {
                        stretch_sum += len as f64 / base as f64;
                        stretch_count += 1;
                    }
                }
            }
            let est = Estimate::from_counts(successes, sweep.trials);
            rows.push(AttackRow {
                density,
                fraction,
                trials: sweep.trials,
                p_hat: est.p_hat,
                stderr: est.stderr,
                mean_spl: (successes > 0).then(|| spl_sum / successes as f64),
                mean_stretch: (stretch_count > 0).then(|| stretch_sum / stretch_count as f64),
                seed: cell_seed,
            });
        }
    }
    Ok(AttackSweepReport { rows })
}
