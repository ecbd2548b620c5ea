//! Load-aware edge costs and forwarding-tree selection.
//!
//! Each directed edge is priced for a request as its volume plus the load
//! already reserved on the edge up to the request's deadline. Trees are grown
//! from the source with the shortest-path (Takahashi-Matsuyama) heuristic:
//! every round attaches the cheapest unconnected terminal to the partial tree.

use std::cmp::Ordering;

use thiserror::Error;

use super::{EdgeId, ForwardingTree, NodeId, Topology};
use crate::scheduler::TransferRequest;
use crate::timeline::Timeline;
use crate::EPS;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("expired deadline: slot {deadline} is not after the current slot {now}")]
    ExpiredDeadline { deadline: u64, now: u64 },
    #[error("node {0} is not in the topology")]
    UnknownNode(NodeId),
    #[error("request has no destinations")]
    NoDestinations,
    #[error("destination {0} is the source")]
    DestinationIsSource(NodeId),
    #[error("destination {0} is unreachable from the source")]
    Unreachable(NodeId),
    #[error("path selection needs exactly one destination, got {0}")]
    NotUnicast(usize),
}

/// `W = V + sum of r_e(t)` over the request's window `(t_now, deadline]`.
pub fn edge_cost(
    edge: EdgeId,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Result<f64, GraphError> {
    let now = timeline.now();
    if request.deadline <= now {
        return Err(GraphError::ExpiredDeadline {
            deadline: request.deadline,
            now,
        });
    }
    Ok(request.volume + timeline.load(edge, now + 1..=request.deadline))
}

pub fn tree_weight(
    tree: &ForwardingTree,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Result<f64, GraphError> {
    tree.edges()
        .iter()
        .map(|&e| edge_cost(e, request, timeline))
        .sum()
}

/// Picks the forwarding tree for a new request.
pub fn select_tree(
    topology: &Topology,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Result<ForwardingTree, GraphError> {
    check_endpoints(topology, request)?;
    let weights = edge_weights(topology, request, timeline)?;
    takahashi_matsuyama(topology, &weights, request.source, &request.destinations)
}

/// Min-cost path for a single-destination request; the one-terminal case of [`select_tree`].
pub fn select_path(
    topology: &Topology,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Result<ForwardingTree, GraphError> {
    if request.destinations.len() != 1 {
        return Err(GraphError::NotUnicast(request.destinations.len()));
    }
    select_tree(topology, request, timeline)
}

/// Per-edge weights indexed by the topology's dense edge index.
pub fn edge_weights(
    topology: &Topology,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Result<Vec<f64>, GraphError> {
    topology
        .edges()
        .iter()
        .map(|&e| edge_cost(e, request, timeline))
        .collect()
}

fn check_endpoints(topology: &Topology, request: &TransferRequest) -> Result<(), GraphError> {
    if !topology.contains_node(request.source) {
        return Err(GraphError::UnknownNode(request.source));
    }
    if request.destinations.is_empty() {
        return Err(GraphError::NoDestinations);
    }
    for &d in &request.destinations {
        if !topology.contains_node(d) {
            return Err(GraphError::UnknownNode(d));
        }
        if d == request.source {
            return Err(GraphError::DestinationIsSource(d));
        }
    }
    Ok(())
}

/// Shortest-path Steiner heuristic over arbitrary positive directed weights.
pub fn takahashi_matsuyama(
    topology: &Topology,
    weights: &[f64],
    root: NodeId,
    terminals: &[NodeId],
) -> Result<ForwardingTree, GraphError> {
    let n = topology.node_count();
    let mut in_tree = vec![false; n];
    in_tree[root.index()] = true;
    let mut pending: Vec<NodeId> = terminals.to_vec();
    pending.sort_unstable();
    pending.dedup();
    pending.retain(|&t| t != root);

    let mut edges = Vec::new();
    while !pending.is_empty() {
        let search = dijkstra(topology, weights, &in_tree);
        let target = pending
            .iter()
            .copied()
            .filter(|t| search.reached(*t))
            .min_by(|&a, &b| search.cmp_nodes(a, b))
            .ok_or_else(|| GraphError::Unreachable(pending[0]))?;

        let mut path = Vec::new();
        let mut cur = target;
        while let Some(p) = search.parent[cur.index()] {
            path.push(EdgeId::new(p, cur));
            cur = p;
        }
        debug_assert!(in_tree[cur.index()]);
        for e in path.into_iter().rev() {
            in_tree[e.head.index()] = true;
            edges.push(e);
        }
        pending.retain(|t| !in_tree[t.index()]);
    }
    Ok(ForwardingTree::new(root, terminals.iter().copied(), edges))
}

/// `(distance, hops)` label; distances within `EPS` count as equal so that
/// hop count, and then node id, break ties.
#[derive(Debug, Clone, Copy)]
struct Label {
    dist: f64,
    hops: u32,
}

impl Label {
    fn cmp(&self, other: &Label) -> Ordering {
        if (self.dist - other.dist).abs() > EPS {
            self.dist.total_cmp(&other.dist)
        } else {
            self.hops.cmp(&other.hops)
        }
    }
}

struct Search {
    label: Vec<Option<Label>>,
    parent: Vec<Option<NodeId>>,
}

impl Search {
    fn reached(&self, node: NodeId) -> bool {
        self.label[node.index()].is_some()
    }

    fn cmp_nodes(&self, a: NodeId, b: NodeId) -> Ordering {
        let (la, lb) = (
            self.label[a.index()].unwrap(),
            self.label[b.index()].unwrap(),
        );
        la.cmp(&lb).then(a.cmp(&b))
    }
}

/// Multi-source Dijkstra from every node flagged in `sources`.
///
/// Uses the O(V^2) selection loop: WAN topologies are small and the tolerant
/// label comparison is not a total order a binary heap could rely on.
fn dijkstra(topology: &Topology, weights: &[f64], sources: &[bool]) -> Search {
    let n = topology.node_count();
    let mut search = Search {
        label: vec![None; n],
        parent: vec![None; n],
    };
    let mut done = vec![false; n];
    for (i, &s) in sources.iter().enumerate() {
        if s {
            search.label[i] = Some(Label { dist: 0.0, hops: 0 });
        }
    }
    loop {
        let next = (0..n)
            .filter(|&i| !done[i] && search.label[i].is_some())
            .map(|i| NodeId(i as u32))
            .min_by(|&a, &b| search.cmp_nodes(a, b));
        let Some(u) = next else { break };
        done[u.index()] = true;
        let base = search.label[u.index()].unwrap();
        for &(v, idx) in topology.out_edges(u) {
            if done[v.index()] {
                continue;
            }
            let cand = Label {
                dist: base.dist + weights[idx],
                hops: base.hops + 1,
            };
            let replace = match search.label[v.index()] {
                None => true,
                Some(cur) => match cand.cmp(&cur) {
                    Ordering::Less => true,
                    Ordering::Equal => search.parent[v.index()].is_some_and(|p| u < p),
                    Ordering::Greater => false,
                },
            };
            if replace {
                search.label[v.index()] = Some(cand);
                search.parent[v.index()] = Some(u);
            }
        }
    }
    search
}
