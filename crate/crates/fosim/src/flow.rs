//! Flows, forwarding rules, and the TL/AL registries.
//!
//! A flow's data-plane path is never stored directly by the switches: each
//! node holds at most one rule per priority level for the flow, and the path
//! is whatever [`active_path`] recovers by walking those rules from the
//! source. High-priority rules shadow low-priority ones, which is the whole
//! failover trick: installing a high-priority backup path flips forwarding
//! without touching the still-installed normal path.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{LinkId, NetworkGraph, NodeId};

/// Flow identifier; the arrival index in all bundled scenarios.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FlowId(pub u64);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A constant-rate traffic demand from `src` to `dst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficDemand {
    pub flow_id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub rate_mbps: f64,
}

/// An ordered node sequence forming a simple path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowPath(pub Vec<NodeId>);

impl FlowPath {
    pub fn src(&self) -> &NodeId {
        self.0.first().expect("path is never empty")
    }

    pub fn dst(&self) -> &NodeId {
        self.0.last().expect("path is never empty")
    }

    pub fn hop_count(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// The links traversed, in path order.
    pub fn links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.0
            .windows(2)
            .map(|w| LinkId::new(w[0].clone(), w[1].clone()))
    }

    /// True when the path crosses the given link.
    pub fn crosses(&self, link: &LinkId) -> bool {
        self.links().any(|l| &l == link)
    }
}

impl fmt::Display for FlowPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Rule priority. `High` strictly outranks `Low` when a node matches a packet.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum RulePriority {
    Low,
    High,
}

/// Where a matching node forwards the flow next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextHop {
    Node(NodeId),
    /// The flow terminates here (the rule on the destination node).
    Deliver,
}

/// One forwarding rule: at `node`, traffic of `flow_id` goes to `next_hop`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRule {
    pub flow_id: FlowId,
    pub node: NodeId,
    pub next_hop: NextHop,
    pub priority: RulePriority,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("rule already present for flow {flow} at {node} priority {priority:?}")]
    DuplicateRule {
        flow: FlowId,
        node: NodeId,
        priority: RulePriority,
    },
}

/// All per-node flow tables, keyed deterministically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTables {
    rules: BTreeMap<NodeId, BTreeMap<(FlowId, RulePriority), FlowRule>>,
}

impl FlowTables {
    pub fn new() -> Self {
        Self::default()
    }

    /// Installs one rule per node along `path` at the given priority. The
    /// destination node gets a `Deliver` rule. Errors if any node already
    /// holds a rule for this (flow, priority) — callers replacing a path must
    /// delete first (see [`FlowTables::delete_rules`]).
    pub fn install_rules(
        &mut self,
        path: &FlowPath,
        flow_id: FlowId,
        priority: RulePriority,
    ) -> Result<(), TableError> {
        for node in &path.0 {
            if self
                .rules
                .get(node)
                .is_some_and(|t| t.contains_key(&(flow_id, priority)))
            {
                return Err(TableError::DuplicateRule {
                    flow: flow_id,
                    node: node.clone(),
                    priority,
                });
            }
        }
        for w in path.0.windows(2) {
            self.insert(FlowRule {
                flow_id,
                node: w[0].clone(),
                next_hop: NextHop::Node(w[1].clone()),
                priority,
            });
        }
        self.insert(FlowRule {
            flow_id,
            node: path.dst().clone(),
            next_hop: NextHop::Deliver,
            priority,
        });
        Ok(())
    }

    fn insert(&mut self, rule: FlowRule) {
        self.rules
            .entry(rule.node.clone())
            .or_default()
            .insert((rule.flow_id, rule.priority), rule);
    }

    /// Removes every rule for `(flow_id, priority)` on every node. Deleting
    /// absent rules is a no-op, mirroring switch flow-table semantics.
    pub fn delete_rules(&mut self, flow_id: FlowId, priority: RulePriority) {
        for table in self.rules.values_mut() {
            table.remove(&(flow_id, priority));
        }
        self.rules.retain(|_, t| !t.is_empty());
    }

    /// The rule matched at `node` for `flow_id`: the High rule if present,
    /// otherwise the Low rule.
    pub fn matching_rule(&self, node: &NodeId, flow_id: FlowId) -> Option<&FlowRule> {
        let table = self.rules.get(node)?;
        table
            .get(&(flow_id, RulePriority::High))
            .or_else(|| table.get(&(flow_id, RulePriority::Low)))
    }

    pub fn rule(&self, node: &NodeId, flow_id: FlowId, priority: RulePriority) -> Option<&FlowRule> {
        self.rules.get(node)?.get(&(flow_id, priority))
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Number of installed rules across all nodes.
    pub fn rule_count(&self) -> usize {
        self.rules.values().map(|t| t.len()).sum()
    }

    /// True if any node holds a rule for `(flow_id, priority)`.
    pub fn has_rules(&self, flow_id: FlowId, priority: RulePriority) -> bool {
        self.rules
            .values()
            .any(|t| t.contains_key(&(flow_id, priority)))
    }
}

/// Result of walking the data plane for one flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActivePath {
    Path(FlowPath),
    /// Traffic is not being delivered: a node had no matching rule, a
    /// traversed link was down, the walk looped, or it «delivered» early.
    Blackhole,
}

impl ActivePath {
    pub fn as_path(&self) -> Option<&FlowPath> {
        match self {
            ActivePath::Path(p) => Some(p),
            ActivePath::Blackhole => None,
        }
    }

    pub fn is_blackhole(&self) -> bool {
        matches!(self, ActivePath::Blackhole)
    }
}

/// Walks the installed rules from `demand.src`, following the
/// highest-priority match at each node, and reports the delivered path or
/// [`ActivePath::Blackhole`]. A walk longer than the node count proves a
/// loop. A traversed down link blackholes: the data plane cannot forward
/// over it even though the rule survives in the table.
pub fn active_path(tables: &FlowTables, graph: &NetworkGraph, demand: &TrafficDemand) -> ActivePath {
    let mut at = demand.src.clone();
    let mut nodes = vec![at.clone()];
    // |V| edges suffice for any simple path; one more step proves a loop.
    for _ in 0..graph.node_count() {
        let Some(rule) = tables.matching_rule(&at, demand.flow_id) else {
            return ActivePath::Blackhole;
        };
        match &rule.next_hop {
            NextHop::Deliver => {
                return if at == demand.dst {
                    ActivePath::Path(FlowPath(nodes))
                } else {
                    ActivePath::Blackhole
                };
            }
            NextHop::Node(next) => {
                let link = LinkId::new(at.clone(), next.clone());
                if !graph.link_is_up(&link) {
                    return ActivePath::Blackhole;
                }
                at = next.clone();
                nodes.push(at.clone());
            }
        }
    }
    ActivePath::Blackhole
}

/// TL: per-link set of flows currently recorded as routed across it.
///
/// The registry is control-plane bookkeeping, updated by the routing and
/// recovery algorithms. During an unresolved failure it intentionally keeps
/// entries for affected flows on their pre-failure links (the recovery
/// algorithm only rewrites the backup path's links); the stale entries are
/// purged when the flow departs or when the failed link comes back.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkFlowRegistry {
    by_link: BTreeMap<LinkId, BTreeSet<FlowId>>,
}

impl LinkFlowRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, link: LinkId, flow: FlowId) {
        self.by_link.entry(link).or_default().insert(flow);
    }

    /// Removes `flow` from one link's set. Removing an absent entry errors,
    /// which catches bookkeeping bugs early.
    pub fn remove(&mut self, link: &LinkId, flow: FlowId) -> Result<(), RegistryError> {
        let set = self
            .by_link
            .get_mut(link)
            .ok_or_else(|| RegistryError::NotRegistered(flow, link.clone()))?;
        if !set.remove(&flow) {
            return Err(RegistryError::NotRegistered(flow, link.clone()));
        }
        if set.is_empty() {
            self.by_link.remove(link);
        }
        Ok(())
    }

    /// Removes `flow` from every link's set (flow departure, revert cleanup).
    pub fn purge(&mut self, flow: FlowId) {
        self.by_link.retain(|_, set| {
            set.remove(&flow);
            !set.is_empty()
        });
    }

    pub fn flows_on(&self, link: &LinkId) -> BTreeSet<FlowId> {
        self.by_link.get(link).cloned().unwrap_or_default()
    }

    pub fn count_on(&self, link: &LinkId) -> usize {
        self.by_link.get(link).map(|s| s.len()).unwrap_or(0)
    }

    pub fn contains(&self, link: &LinkId, flow: FlowId) -> bool {
        self.by_link.get(link).is_some_and(|s| s.contains(&flow))
    }

    /// Links with a nonempty set, in key order.
    pub fn nonempty_links(&self) -> impl Iterator<Item = (&LinkId, &BTreeSet<FlowId>)> {
        self.by_link.iter()
    }
}

/// AL: per-failed-link set of flows rerouted (or blackholed) by that failure,
/// pending revert when the link comes back.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffectedFlowRegistry {
    by_link: BTreeMap<LinkId, BTreeSet<FlowId>>,
}

impl AffectedFlowRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, link: LinkId, flow: FlowId) {
        self.by_link.entry(link).or_default().insert(flow);
    }

    pub fn remove(&mut self, link: &LinkId, flow: FlowId) {
        if let Some(set) = self.by_link.get_mut(link) {
            set.remove(&flow);
            if set.is_empty() {
                self.by_link.remove(link);
            }
        }
    }

    /// Drops `flow` from every failed link's set (flow departure).
    pub fn purge(&mut self, flow: FlowId) {
        self.by_link.retain(|_, set| {
            set.remove(&flow);
            !set.is_empty()
        });
    }

    pub fn flows_for(&self, link: &LinkId) -> BTreeSet<FlowId> {
        self.by_link.get(link).cloned().unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.by_link.is_empty()
    }

    /// Union over all failed links.
    pub fn all_flows(&self) -> BTreeSet<FlowId> {
        self.by_link.values().flatten().copied().collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("flow {0} not registered on link {1}")]
    NotRegistered(FlowId, LinkId),
}
