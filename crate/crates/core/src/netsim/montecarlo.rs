use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{max_edges, shortest_path_length};
use super::random::{gen_graph, EdgeModel};
use super::seeds::{derive_seed, stream_rng};
use super::NetsimError;

/// A Bernoulli proportion estimated from independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// `sqrt(p_hat (1 - p_hat) / trials)`.
    pub stderr: f64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "an estimate needs at least one trial");
        let p_hat = successes as f64 / trials as f64;
        Estimate {
            successes,
            trials,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        }
    }

    /// Standard error of the estimator if the true proportion were `p`.
    pub fn stderr_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Fraction of random graphs in which node `0` reaches node `n - 1`.
///
/// Trial `i` samples a fresh graph from stream `i` of `seed`.
pub fn mc_path_probability(
    n: usize,
    edge_count: usize,
    trials: u64,
    seed: u64,
    model: EdgeModel,
) -> Result<Estimate, NetsimError> {
    if n == 0 {
        return Err(NetsimError::EmptyGraph);
    }
    if trials == 0 {
        return Err(NetsimError::NoTrials);
    }
    let lmax = max_edges(n);
    if edge_count > lmax {
        return Err(NetsimError::LTooLarge { l: edge_count, lmax });
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial);
            let graph = gen_graph(model, n, edge_count, &mut rng).expect("edge count checked above");
            u64::from(shortest_path_length(&graph, 0, n - 1).is_some())
        })
        .sum();
    Ok(Estimate::from_counts(successes, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityRow {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub trials: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Reference line drawn on the probability curves at `fraction * Lmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMarker {
    pub n: usize,
    pub lmax: usize,
    pub fraction: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl ThresholdMarker {
    pub fn new(n: usize, fraction: f64) -> Self {
        let lmax = max_edges(n);
        ThresholdMarker {
            n,
            lmax,
            fraction,
            // Rounded to micro-edges so 0.7 * 45 reads as 31.5.
            l: (fraction * lmax as f64 * 1e6).round() / 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub rows: Vec<ConnectivityRow>,
    pub markers: Vec<ThresholdMarker>,
}

impl ConnectivityReport {
    pub fn curve(&self, n: usize) -> impl Iterator<Item = &ConnectivityRow> + '_ {
        self.rows.iter().filter(move |r| r.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivitySweep {
    pub node_counts: Vec<usize>,
    /// Edge counts to evaluate; `None` means `1..=Lmax` for each `n`.
    pub edge_counts: Option<Vec<usize>>,
    pub trials: u64,
    pub model: EdgeModel,
    pub markers: Vec<(usize, f64)>,
}

/// Path probability curves over `(n, L)`; every cell gets its own seed
/// derived from `seed`, `n` and `L`.
pub fn connectivity_sweep(sweep: &ConnectivitySweep, seed: u64) -> Result<ConnectivityReport, NetsimError> {
    let mut rows = Vec::new();
    for &n in &sweep.node_counts {
        let lmax = max_edges(n);
        let edge_counts: Vec<usize> = match &sweep.edge_counts {
            Some(list) => list.clone(),
            None => (1..=lmax).collect(),
        };
        for l in edge_counts {
            let cell_seed = derive_seed(seed, &[n as u64, l as u64]);
            let est = mc_path_probability(n, l, sweep.trials, cell_seed, sweep.model)?;
            rows.push(ConnectivityRow {
                n,
                l,
                trials: est.trials,
                p_hat: est.p_hat,
                stderr: est.stderr,
                seed: cell_seed,
            });
        }
    }
    let markers = sweep
        .markers
        .iter()
        .map(|&(n, fraction)| ThresholdMarker::new(n, fraction))
        .collect();
    Ok(ConnectivityReport { rows, markers })
}
