use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::NetsimError;
use crate::chain::NodeId;

/// Identifier offset for mobile nodes: mobile `c_k` is `NodeId(MOBILE_ID_BASE + k)`.
pub const MOBILE_ID_BASE: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub hub: NodeId,
    /// Mobile members, ascending.
    pub mobiles: Vec<NodeId>,
}

impl Segment {
    /// Hub followed by its mobiles.
    pub fn members(&self) -> Vec<NodeId> {
        std::iter::once(self.hub).chain(self.mobiles.iter().copied()).collect()
    }
}

/// Stationary hubs (ids `1..=hub_count`) each anchoring a subnet of mobile
/// nodes. Adjacent subnets share `overlap` mobiles, which form the boundary set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedTopology {
    pub segments: Vec<Segment>,
    /// Mobile id to the indices of the segments it belongs to.
    pub membership: BTreeMap<NodeId, Vec<usize>>,
    pub boundary: BTreeSet<NodeId>,
    mobiles_per_segment: usize,
    overlap: usize,
}

pub fn gen_segmented_topology<R: Rng + ?Sized>(
    hub_count: usize,
    mobiles_per_segment: usize,
    overlap_count: usize,
    rng: &mut R,
) -> Result<SegmentedTopology, NetsimError> {
    if hub_count == 0 {
        return Err(NetsimError::Config(
            "a segmented topology needs at least one hub".into(),
        ));
    }
    if overlap_count > 0 && overlap_count >= mobiles_per_segment {
        return Err(NetsimError::Config(format!(
            "overlap {overlap_count} must be smaller than the segment size {mobiles_per_segment}"
        )));
    }
    let stride = mobiles_per_segment - overlap_count;
    let total = if mobiles_per_segment == 0 {
        0
    } else {
        stride * (hub_count - 1) + mobiles_per_segment
    };
    let mut labels: Vec<NodeId> = (1..=total as u64).map(|k| NodeId(MOBILE_ID_BASE + k)).collect();
    labels.shuffle(rng);

    let mut segments = Vec::with_capacity(hub_count);
    let mut membership: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for s in 0..hub_count {
        let mut mobiles: Vec<NodeId> = labels[s * stride..s * stride + mobiles_per_segment].to_vec();
        mobiles.sort_unstable();
        for &m in &mobiles {
            membership.entry(m).or_default().push(s);
        }
        segments.push(Segment {
            hub: NodeId(s as u64 + 1),
            mobiles,
        });
    }
    let boundary = membership
        .iter()
        .filter(|(_, segs)| segs.len() >= 2)
        .map(|(&m, _)| m)
        .collect();
    Ok(SegmentedTopology {
        segments,
        membership,
        boundary,
        mobiles_per_segment,
        overlap: overlap_count,
    })
}

impl SegmentedTopology {
    pub fn hubs(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.segments.iter().map(|s| s.hub)
    }

    pub fn mobile_count(&self) -> usize {
        self.membership.len()
    }

    /// Boundary nodes shared by segments `s` and `s + 1`.
    pub fn shared_between(&self, s: usize) -> Vec<NodeId> {
        self.membership
            .iter()
            .filter(|(_, segs)| segs.contains(&s) && segs.contains(&(s + 1)))
            .map(|(&m, _)| m)
            .collect()
    }

    /// Same shape with a fresh random assignment of mobiles to positions.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> SegmentedTopology {
        gen_segmented_topology(self.segments.len(), self.mobiles_per_segment, self.overlap, rng)
            .expect("shape was valid when first generated")
    }

    /// Whole network as one graph: every segment is a complete subnet and
    /// consecutive hubs are linked. Returns the graph and the node id of each
    /// vertex (hubs first, then mobiles ascending).
    pub fn to_graph(&self) -> (Graph, Vec<NodeId>) {
        let ids: Vec<NodeId> = self.hubs().chain(self.membership.keys().copied()).collect();
        let vertex: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut graph = Graph::new(ids.len());
        for segment in &self.segments {
            let members = segment.members();
            for (i, a) in members.iter().enumerate() {
                for b in &members[i + 1..] {
                    graph.add_edge(vertex[a], vertex[b]).expect("valid vertices");
                }
            }
        }
        for s in 1..self.segments.len() {
            graph.add_edge(s - 1, s).expect("valid vertices");
        }
        (graph, ids)
    }
}
