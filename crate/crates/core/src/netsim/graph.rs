use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::NetsimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Fixed,
    Mobile,
}

/// `n(n-1)/2`, the edge count of the complete graph on `n` nodes.
pub fn max_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Simple undirected graph on nodes `0..n`.
///
/// Edges are stored as `(low, high)` pairs; edge ids are positions in
/// [`edges`](Graph::edges), which stays in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    positions: Option<Vec<Point>>,
    kinds: Option<Vec<NodeKind>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edges: Vec::new(),
            positions: None,
            kinds: None,
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, NetsimError> {
        let mut graph = Graph::new(n);
        for (a, b) in edges {
            graph.add_edge(a, b)?;
        }
        Ok(graph)
    }

    pub fn complete(n: usize) -> Self {
        let mut graph = Graph::new(n);
        for a in 0..n {
            for b in a + 1..n {
                graph.insert_new_edge(a, b);
            }
        }
        graph
    }

    pub fn ring(n: usize) -> Self {
        let mut graph = Graph::new(n);
        if n >= 2 {
            for a in 0..n {
                // add_edge dedups the wrap-around pair when n == 2.
                let _ = graph.add_edge(a, (a + 1) % n);
            }
        }
        graph
    }

    pub fn path(n: usize) -> Self {
        let mut graph = Graph::new(n);
        for a in 1..n {
            graph.insert_new_edge(a - 1, a);
        }
        graph
    }

    /// Adds an undirected edge. Returns `false` when it was already present.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool, NetsimError> {
        let n = self.node_count();
        if a >= n || b >= n {
            return Err(NetsimError::InvalidNode {
                node: a.max(b),
                nodes: n,
            });
        }
        if a == b {
            return Err(NetsimError::SelfLoop { node: a });
        }
        if self.has_edge(a, b) {
            return Ok(false);
        }
        self.insert_new_edge(a, b);
        Ok(true)
    }

    fn insert_new_edge(&mut self, a: usize, b: usize) {
        self.adjacency[a].push(b);
        self.adjacency[b].push(a);
        self.edges.push((a.min(b), a.max(b)));
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (small, other) = if self.adjacency[a].len() <= self.adjacency[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[small].contains(&other)
    }

    pub fn positions(&self) -> Option<&[Point]> {
        self.positions.as_deref()
    }

    pub fn kinds(&self) -> Option<&[NodeKind]> {
        self.kinds.as_deref()
    }

    pub fn with_layout(mut self, positions: Vec<Point>, kinds: Vec<NodeKind>) -> Self {
        assert_eq!(positions.len(), self.node_count());
        assert_eq!(kinds.len(), self.node_count());
        self.positions = Some(positions);
        self.kinds = Some(kinds);
        self
    }

    /// Copy of the graph keeping only the edges for which `keep(edge_id)` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize) -> bool) -> Graph {
        let mut graph = Graph::new(self.node_count());
        for (id, &(a, b)) in self.edges.iter().enumerate() {
            if keep(id) {
                graph.insert_new_edge(a, b);
            }
        }
        graph.positions = self.positions.clone();
        graph.kinds = self.kinds.clone();
        graph
    }

    /// Same node set and edge set, ignoring insertion order and layout.
    pub fn same_topology(&self, other: &Graph) -> bool {
        if self.node_count() != other.node_count() || self.edge_count() != other.edge_count() {
            return false;
        }
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Hop count of a shortest path from `from` to `to`, or `None` when `to` is
/// unreachable.
pub fn shortest_path_length(graph: &Graph, from: usize, to: usize) -> Option<usize> {
    bfs_distance(graph.node_count(), from, to, |v| graph.neighbors(v).iter().copied())
}

/// Breadth-first search over an implicit adjacency function.
pub(crate) fn bfs_distance<I>(n: usize, from: usize, to: usize, mut neighbors: impl FnMut(usize) -> I) -> Option<usize>
where
    I: Iterator<Item = usize>,
{
    if from == to {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[from] = 0;
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        for w in neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if w == to {
                    return Some(dist[w]);
                }
                queue.push_back(w);
            }
        }
    }
    None
}
