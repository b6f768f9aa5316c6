use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{max_edges, Graph};
use super::NetsimError;

/// Which random-graph ensemble a connectivity sweep samples from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeModel {
    /// Exactly `L` distinct edges, uniform over all `C(Lmax, L)` edge sets.
    #[default]
    ExactCount,
    /// Each of the `Lmax` possible edges present independently with
    /// probability `L / Lmax`.
    Bernoulli,
}

impl FromStr for EdgeModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" | "exact_count" | "exact-count" => Ok(EdgeModel::ExactCount),
            "bernoulli" => Ok(EdgeModel::Bernoulli),
            other => Err(format!("unknown edge model `{other}` (expected exact|bernoulli)")),
        }
    }
}

/// Maps an edge id in `0..Lmax` to its `(a, b)` pair, `a < b`, enumerating
/// pairs row by row: (0,1), (0,2), .., (0,n-1), (1,2), ..
pub fn pair_from_index(n: usize, mut id: usize) -> (usize, usize) {
    debug_assert!(id < max_edges(n));
    let mut a = 0;
    loop {
        let row = n - 1 - a;
        if id < row {
            return (a, a + 1 + id);
        }
        id -= row;
        a += 1;
    }
}

/// Uniformly random simple graph on `n` labelled nodes with exactly
/// `edge_count` edges.
pub fn gen_random_graph<R: Rng + ?Sized>(n: usize, edge_count: usize, rng: &mut R) -> Result<Graph, NetsimError> {
    let lmax = max_edges(n);
    if edge_count > lmax {
        return Err(NetsimError::LTooLarge { l: edge_count, lmax });
    }
    let mut ids = index::sample(rng, lmax, edge_count).into_vec();
    ids.sort_unstable();
    Graph::from_edges(n, ids.into_iter().map(|id| pair_from_index(n, id)))
}

/// Graph where every possible edge is present independently with probability `p`.
pub fn gen_bernoulli_graph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph, NetsimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NetsimError::InvalidProbability(p));
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Samples one graph from `model` with nominal edge count `edge_count`.
pub fn gen_graph<R: Rng + ?Sized>(
    model: EdgeModel,
    n: usize,
    edge_count: usize,
    rng: &mut R,
) -> Result<Graph, NetsimError> {
    match model {
        EdgeModel::ExactCount => gen_random_graph(n, edge_count, rng),
        EdgeModel::Bernoulli => {
            let lmax = max_edges(n);
            if edge_count > lmax {
                return Err(NetsimError::LTooLarge { l: edge_count, lmax });
            }
            let p = if lmax == 0 {
                0.0
            } else {
                edge_count as f64 / lmax as f64
            };
            gen_bernoulli_graph(n, p, rng)
        }
    }
}
