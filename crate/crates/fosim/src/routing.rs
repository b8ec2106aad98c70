//! Weighted shortest-path routing and flow admission.
//!
//! Path selection is Dijkstra over the current per-link weights with a total
//! tie-break order — (total weight, hop count, lexicographic node sequence) —
//! so equal-cost candidates always resolve the same way. Weights must be
//! strictly positive (the weight functions guarantee that); `+∞` marks down
//! links and is never traversed.
//!
//! Admission never rejects a flow for lack of bandwidth: the flow is routed
//! and installed regardless, and the outcome records whether the path had
//! enough residual capacity at decision time (`satisfied`). Rejecting would
//! change subsequent weights and hide exactly the congestion the admission
//! grid is meant to show.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::controller::{Controller, RuleOp};
use crate::flow::{FlowId, FlowPath, TrafficDemand};
use crate::telemetry::measure_loads;
use crate::topology::{NetworkGraph, NodeId};
use crate::weights::{refresh_weights, LinkWeights, WeightMode};

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no up path from {src} to {dst}")]
    Unreachable { src: NodeId, dst: NodeId },
    #[error("unknown flow {0}")]
    UnknownFlow(FlowId),
    #[error("flow id {0} already active")]
    DuplicateFlow(FlowId),
}

/// Admission result: the installed path and whether the minimum residual
/// along it covered the demand rate at decision time (before the flow's own
/// load was added).
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingOutcome {
    pub path: FlowPath,
    pub satisfied: bool,
}

/// Total weight of a path under the given weights, folded in path order.
/// The same left-to-right fold Dijkstra uses, so costs compare bit-exactly.
pub fn path_cost(weights: &LinkWeights, path: &FlowPath) -> f64 {
    path.links().fold(0.0, |acc, l| acc + weights.get(&l))
}

/// A Dijkstra label. The derived comparison implements the routing
/// tie-break: cost first (IEEE total order; no NaNs reach here), then hop
/// count, then the node sequence itself.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Label {
    cost: TotalF64,
    hops: usize,
    path: Vec<NodeId>,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .cmp(&other.cost)
            .then_with(|| self.hops.cmp(&other.hops))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// f64 wrapper ordered by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TotalF64(f64);

impl Eq for TotalF64 {}

impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight simple path from `src` to `dst` over up links with finite
/// weight, under the (weight, hops, lexicographic) tie-break.
///
/// Strictly positive weights mean a revisit can never beat a simple prefix,
/// so the search naturally yields simple paths. Extending a label by an edge
/// preserves the label order, which makes the greedy settle order correct
/// for the full tie-break, not just for cost.
pub fn shortest_path(
    graph: &NetworkGraph,
    weights: &LinkWeights,
    src: &NodeId,
    dst: &NodeId,
) -> Result<FlowPath, RouteError> {
    for n in [src, dst] {
        if !graph.contains_node(n) {
            return Err(RouteError::UnknownNode(n.clone()));
        }
    }
    if src == dst {
        return Ok(FlowPath(vec![src.clone()]));
    }

    let mut settled: BTreeSet<NodeId> = BTreeSet::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<Label>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse(Label {
        cost: TotalF64(0.0),
        hops: 0,
        path: vec![src.clone()],
    }));

    while let Some(std::cmp::Reverse(label)) = heap.pop() {
        let at = label.path.last().expect("label path is never empty").clone();
        if !settled.insert(at.clone()) {
            continue;
        }
        if &at == dst {
            return Ok(FlowPath(label.path));
        }
        for (far, link) in graph.up_neighbors(&at) {
            if settled.contains(far) {
                continue;
            }
            let w = weights.get(link);
            if !w.is_finite() {
                continue;
            }
            debug_assert!(w > 0.0, "link weights must be strictly positive");
            let mut path = label.path.clone();
            path.push(far.clone());
            heap.push(std::cmp::Reverse(Label {
                cost: TotalF64(label.cost.0 + w),
                hops: label.hops + 1,
                path,
            }));
        }
    }

    Err(RouteError::Unreachable {
        src: src.clone(),
        dst: dst.clone(),
    })
}

impl Controller {
    /// Admits a new flow: refreshes normal-state weights from current loads,
    /// routes it, records it in the TL registry, and returns the low-priority
    /// install op. Errors leave the controller untouched.
    pub fn admit_flow(
        &mut self,
        graph: &NetworkGraph,
        demand: TrafficDemand,
    ) -> Result<(RoutingOutcome, Vec<RuleOp>), RouteError> {
        if self.demands.contains_key(&demand.flow_id) {
            return Err(RouteError::DuplicateFlow(demand.flow_id));
        }
        let samples = measure_loads(graph, &self.route_view());
        let weights = refresh_weights(WeightMode::Normal, &self.params, graph, &samples, &self.tl);
        let path = shortest_path(graph, &weights, &demand.src, &demand.dst)?;

        // Satisfaction is judged on residuals before this flow's own load.
        let min_residual = path
            .links()
            .map(|l| samples.get(&l).map(|s| s.r_mbps).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min);
        let satisfied = min_residual >= demand.rate_mbps;

        for link in path.links() {
            self.tl.add(link, demand.flow_id);
        }
        let flow_id = demand.flow_id;
        self.low_paths.insert(flow_id, path.clone());
        self.satisfied.insert(flow_id, satisfied);
        self.demands.insert(flow_id, demand);

        Ok((
            RoutingOutcome {
                path: path.clone(),
                satisfied,
            },
            vec![RuleOp::InstallLow { flow: flow_id, path }],
        ))
    }

    /// Removes a departing flow from every registry and returns the op that
    /// clears its rules at both priorities.
    pub fn remove_flow(&mut self, flow: FlowId) -> Result<Vec<RuleOp>, RouteError> {
        if self.demands.remove(&flow).is_none() {
            return Err(RouteError::UnknownFlow(flow));
        }
        self.low_paths.remove(&flow);
        self.high_paths.remove(&flow);
        self.satisfied.remove(&flow);
        self.tl.purge(flow);
        self.al.purge(flow);
        Ok(vec![RuleOp::DeleteAll { flow }])
    }
}
