#![allow(dead_code)]

use std::collections::BTreeMap;

use ddccast::graph::edge_weights;
use ddccast::scheduler::RequestId;
use ddccast::timeline::Timeline;
use ddccast::{NodeId, Topology, TransferRequest};
use ddccast_oracle::{Arc, FixpointState, PlacedSchedule};
use rand::seq::SliceRandom;
use rand::Rng;

/// Connected graph: a random spanning tree plus up to `extra` more links.
pub fn random_topology(rng: &mut impl Rng, nodes: usize, extra: usize) -> Topology {
    let mut order: Vec<u32> = (0..nodes as u32).collect();
    order.shuffle(rng);
    let mut links: Vec<(u32, u32)> = (1..nodes)
        .map(|i| (order[rng.random_range(0..i)], order[i]))
        .collect();
    for _ in 0..extra {
        let a = rng.random_range(0..nodes as u32);
        let b = rng.random_range(0..nodes as u32);
        let dup = links
            .iter()
            .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b));
        if a != b && !dup {
            links.push((a, b));
        }
    }
    Topology::from_edges(nodes, &links).unwrap()
}

pub fn random_request(
    rng: &mut impl Rng,
    topology: &Topology,
    id: u64,
    max_dests: usize,
    arrival: u64,
    max_offset: u64,
    max_volume: f64,
) -> TransferRequest {
    let n = topology.node_count() as u32;
    let source = rng.random_range(0..n);
    let mut others: Vec<u32> = (0..n).filter(|&v| v != source).collect();
    others.shuffle(rng);
    let k = rng.random_range(1..=max_dests.min(others.len()));
    TransferRequest::new(
        RequestId::new(id),
        NodeId(source),
        others[..k].iter().map(|&d| NodeId(d)).collect(),
        rng.random_range(0.05..max_volume),
        arrival + rng.random_range(1..=max_offset),
        arrival,
    )
    .unwrap()
}

/// Every directed edge with its cost for `request`, in oracle form.
pub fn oracle_arcs(
    topology: &Topology,
    request: &TransferRequest,
    timeline: &Timeline,
) -> Vec<Arc> {
    let weights = edge_weights(topology, request, timeline).unwrap();
    topology
        .edges()
        .iter()
        .zip(weights)
        .map(|(e, w)| Arc {
            tail: e.tail.0,
            head: e.head.0,
            weight: w,
        })
        .collect()
}

/// The calendar's future placements in oracle form.
pub fn fixpoint_state(timeline: &Timeline) -> FixpointState {
    FixpointState {
        capacity: timeline.capacity(),
        now: timeline.now(),
        schedules: timeline
            .schedules()
            .map(|s| PlacedSchedule {
                label: s.request().to_string(),
                edges: s
                    .tree()
                    .edges()
                    .iter()
                    .map(|e| (e.tail.0, e.head.0))
                    .collect(),
                deadline: s.deadline(),
                rates: s
                    .rates()
                    .iter()
                    .map(|(&k, &v)| (k, v))
                    .collect::<BTreeMap<_, _>>(),
            })
            .collect(),
    }
}
