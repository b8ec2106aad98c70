//! Shared test helpers: an exhaustive shortest-path oracle that knows
//! nothing about Dijkstra, random graph generators, and the reference
//! dual-band topology.

// Each integration-test target compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use rand::Rng;

use fosim::flow::FlowPath;
use fosim::routing::path_cost;
use fosim::topology::{LinkKind, NetworkGraph, NodeId};
use fosim::weights::LinkWeights;

pub fn n(s: &str) -> NodeId {
    NodeId::from(s)
}

pub fn path(nodes: &[&str]) -> FlowPath {
    FlowPath(nodes.iter().map(|s| n(s)).collect())
}

/// The six-node reference topology: five APs with 100 Mbps wired uplinks to
/// the gateway and a full 71 Mbps mesh among the APs.
pub fn dual_band_graph() -> NetworkGraph {
    let mut g = NetworkGraph::new();
    let aps = ["AP1", "AP2", "AP3", "AP4", "AP5"];
    g.add_node(n("GW")).unwrap();
    for ap in aps {
        g.add_node(n(ap)).unwrap();
    }
    for ap in aps {
        g.add_link(n(ap), n("GW"), LinkKind::Wired, 100.0, 0.37).unwrap();
    }
    for i in 0..aps.len() {
        for j in i + 1..aps.len() {
            g.add_link(n(aps[i]), n(aps[j]), LinkKind::WirelessMesh, 71.0, 0.66)
                .unwrap();
        }
    }
    g
}

/// Every simple path from `src` to `dst` over up links, by depth-first
/// enumeration. Exponential and proud of it — the whole point is to share
/// no logic with the implementation under test.
pub fn all_simple_paths(graph: &NetworkGraph, src: &NodeId, dst: &NodeId) -> Vec<FlowPath> {
    let mut found = Vec::new();
    let mut stack = vec![src.clone()];
    dfs(graph, dst, &mut stack, &mut found);
    found
}

fn dfs(graph: &NetworkGraph, dst: &NodeId, stack: &mut Vec<NodeId>, found: &mut Vec<FlowPath>) {
    let at = stack.last().expect("stack starts nonempty").clone();
    if &at == dst {
        found.push(FlowPath(stack.clone()));
        return;
    }
    let neighbors: Vec<NodeId> = graph
        .up_neighbors(&at)
        .map(|(next, _)| next.clone())
        .collect();
    for next in neighbors {
        if stack.contains(&next) {
            continue;
        }
        stack.push(next);
        dfs(graph, dst, stack, found);
        stack.pop();
    }
}

/// The best path by the routing total order — smallest cost, then fewest
/// hops, then lexicographically smallest node sequence — or `None` when no
/// finite-cost path exists.
pub fn oracle_best_path(
    graph: &NetworkGraph,
    weights: &LinkWeights,
    src: &NodeId,
    dst: &NodeId,
) -> Option<FlowPath> {
    all_simple_paths(graph, src, dst)
        .into_iter()
        .filter(|p| path_cost(weights, p).is_finite())
        .min_by(|a, b| {
            path_cost(weights, a)
                .total_cmp(&path_cost(weights, b))
                .then(a.hop_count().cmp(&b.hop_count()))
                .then(a.0.cmp(&b.0))
        })
}

/// A random connected graph with 2–6 nodes: a random spanning tree plus a
/// sprinkle of extra edges. All links start up.
pub fn random_connected_graph(rng: &mut impl Rng) -> NetworkGraph {
    let node_count = rng.gen_range(2..=6);
    let mut g = NetworkGraph::new();
    let names: Vec<NodeId> = (0..node_count).map(|i| n(&format!("N{i}"))).collect();
    for name in &names {
        g.add_node(name.clone()).unwrap();
    }
    // spanning tree: attach each node to a random earlier one
    for i in 1..node_count {
        let j = rng.gen_range(0..i);
        add_random_link(rng, &mut g, &names[i], &names[j]);
    }
    // extra edges with probability 1/2 each
    for i in 0..node_count {
        for j in i + 1..node_count {
            if g.link(&fosim::topology::LinkId::new(names[i].clone(), names[j].clone()))
                .is_none()
                && rng.gen_bool(0.5)
            {
                add_random_link(rng, &mut g, &names[i], &names[j]);
            }
        }
    }
    g
}

fn add_random_link(rng: &mut impl Rng, g: &mut NetworkGraph, a: &NodeId, b: &NodeId) {
    let kind = if rng.gen_bool(0.5) {
        LinkKind::Wired
    } else {
        LinkKind::WirelessMesh
    };
    let capacity = rng.gen_range(1.0..200.0);
    g.add_link(a.clone(), b.clone(), kind, capacity, 0.5).unwrap();
}

/// Strictly positive random weights for every link of the graph.
pub fn random_weights(rng: &mut impl Rng, graph: &NetworkGraph) -> LinkWeights {
    let by_link = graph
        .links()
        .map(|(id, _)| (id.clone(), rng.gen_range(0.01..10.0)))
        .collect();
    LinkWeights::from_map(by_link)
}
