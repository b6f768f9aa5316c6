use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, NodeKind, Point};
use super::NetsimError;

/// A roadside deployment: fixed sensors on a straight line plus extra
/// sensors scattered over the band around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentParams {
    pub line_nodes: usize,
    /// Distance between consecutive line sensors, meters.
    pub spacing: f64,
    /// Radio range of a line sensor, meters.
    pub radius: f64,
    /// Extra sensors per square meter of the band.
    pub extra_density: f64,
    /// The band spans `y` in `[-half_width, half_width]` along the line.
    pub half_width: f64,
}

impl DeploymentParams {
    pub fn length(&self) -> f64 {
        self.line_nodes.saturating_sub(1) as f64 * self.spacing
    }

    pub fn area(&self) -> f64 {
        self.length() * 2.0 * self.half_width
    }

    /// Number of extra sensors, `round(density * area)`.
    pub fn extra_count(&self) -> usize {
        (self.extra_density * self.area()).round() as usize
    }

    pub fn check(&self) -> Result<(), NetsimError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.line_nodes < 2 {
            return Err(NetsimError::Config("a deployment needs at least 2 line sensors".into()));
        }
        if !positive(self.spacing) {
            return Err(NetsimError::Config("spacing must be positive".into()));
        }
        if !positive(self.radius) {
            return Err(NetsimError::Config("radius must be positive".into()));
        }
        if !(self.extra_density.is_finite() && self.extra_density >= 0.0) {
            return Err(NetsimError::Config("extra density must be non-negative".into()));
        }
        if !(self.half_width.is_finite() && self.half_width >= 0.0) {
            return Err(NetsimError::Config("half width must be non-negative".into()));
        }
        if self.extra_density > 0.0 && self.area() <= 0.0 {
            return Err(NetsimError::DegenerateArea);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub graph: Graph,
    /// First line sensor.
    pub a: usize,
    /// Last line sensor.
    pub b: usize,
}

/// Places line sensors `0..line_nodes` at `(i * spacing, 0)` and extra
/// sensors uniformly in the band, then links every pair of sensors that lie
/// together inside some line sensor's radius.
pub fn gen_linear_deployment<R: Rng + ?Sized>(
    params: &DeploymentParams,
    rng: &mut R,
) -> Result<Deployment, NetsimError> {
    params.check()?;
    let mut positions: Vec<Point> = (0..params.line_nodes)
        .map(|i| Point::new(i as f64 * params.spacing, 0.0))
        .collect();
    let mut kinds = vec![NodeKind::Fixed; params.line_nodes];
    let length = params.length();
    for _ in 0..params.extra_count() {
        let x = rng.gen::<f64>() * length;
        let y = (rng.gen::<f64>() * 2.0 - 1.0) * params.half_width;
        positions.push(Point::new(x, y));
        kinds.push(NodeKind::Mobile);
    }

    let mut edges = BTreeSet::new();
    for center in 0..params.line_nodes {
        let inside: Vec<usize> = (0..positions.len())
            .filter(|&v| positions[center].distance(&positions[v]) <= params.radius)
            .collect();
        for (i, &u) in inside.iter().enumerate() {
            for &v in &inside[i + 1..] {
                edges.insert((u, v));
            }
        }
    }
    let graph = Graph::from_edges(positions.len(), edges)?.with_layout(positions, kinds);
    Ok(Deployment {
        graph,
        a: 0,
        b: params.line_nodes - 1,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::netsim::graph::shortest_path_length;

    fn line_only(line_nodes: usize, spacing: f64, radius: f64) -> DeploymentParams {
        DeploymentParams {
            line_nodes,
            spacing,
            radius,
            extra_density: 0.0,
            half_width: 10.0,
        }
    }

    #[test]
    fn wide_spacing_disconnects_the_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = gen_linear_deployment(&line_only(6, 25.0, 10.0), &mut rng).unwrap();
        assert_eq!(d.graph.edge_count(), 0);
        assert_eq!(shortest_path_length(&d.graph, d.a, d.b), None);
    }

    // With radius in [spacing, 2 * spacing) each line sensor's disc holds its
    // two neighbours, so the clique around sensor i joins i-1 and i+1 and
    // the shortest A-B path skips every other sensor.
    #[test]
    fn close_spacing_connects_the_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for line_nodes in 2..10 {
            let d = gen_linear_deployment(&line_only(line_nodes, 10.0, 15.0), &mut rng).unwrap();
            assert_eq!(
                shortest_path_length(&d.graph, d.a, d.b),
                Some((line_nodes - 1).div_ceil(2)),
                "line of {line_nodes}"
            );
            assert_eq!(d.graph.edge_count(), 2 * line_nodes - 3);
        }
    }

    #[test]
    fn extras_fill_the_band() {
        let params = DeploymentParams {
            line_nodes: 5,
            spacing: 10.0,
            radius: 12.0,
            extra_density: 0.05,
            half_width: 10.0,
        };
        assert_eq!(params.extra_count(), 40);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = gen_linear_deployment(&params, &mut rng).unwrap();
        assert_eq!(d.graph.node_count(), 45);
        let positions = d.graph.positions().unwrap();
        let kinds = d.graph.kinds().unwrap();
        for (p, k) in positions.iter().zip(kinds).skip(5) {
            assert_eq!(*k, NodeKind::Mobile);
            assert!((0.0..=40.0).contains(&p.x) && p.y.abs() <= 10.0);
        }
        // Every edge lies inside some line sensor's disc.
        for &(u, v) in d.graph.edges() {
            assert!((0..5)
                .any(|c| positions[c].distance(&positions[u]) <= 12.0 && positions[c].distance(&positions[v]) <= 12.0));
        }
    }

    #[test]
    fn degenerate_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = line_only(3, 10.0, 5.0);
        params.extra_density = 1.0;
        params.half_width = 0.0;
        assert!(matches!(
            gen_linear_deployment(&params, &mut rng),
            Err(NetsimError::DegenerateArea)
        ));
        assert!(gen_linear_deployment(&line_only(3, 0.0, 5.0), &mut rng).is_err());
        assert!(gen_linear_deployment(&line_only(3, 1.0, -5.0), &mut rng).is_err());
        assert!(gen_linear_deployment(&line_only(1, 1.0, 5.0), &mut rng).is_err());
    }
}
