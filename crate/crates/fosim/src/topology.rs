//! Network graph: nodes, typed links with capacities, and link up/down state.
//!
//! The graph is undirected with at most one link per node pair, so a link is
//! keyed by the lexicographically sorted pair of its endpoints ([`LinkId`]).
//! A failed link stays in the graph but reports an effective capacity of zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a forwarding node (an access point or the gateway).
///
/// Ordering is plain lexicographic string order; it doubles as the global
/// tie-break order for routing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Physical kind of a link. `Wired` is the Ethernet uplink class (b = 0),
/// `WirelessMesh` the 5 GHz AP-to-AP class (b = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Wired,
    WirelessMesh,
}

/// Canonical key of an undirected link: endpoints stored in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId {
    a: NodeId,
    b: NodeId,
}

impl LinkId {
    /// Builds the canonical key for the pair `(u, v)`, sorting the endpoints.
    ///
    /// Self-loops are rejected by [`NetworkGraph::add_link`], not here, so the
    /// key type stays infallible for lookups.
    pub fn new(u: NodeId, v: NodeId) -> Self {
        if u <= v {
            LinkId { a: u, b: v }
        } else {
            LinkId { a: v, b: u }
        }
    }

    pub fn of(u: &str, v: &str) -> Self {
        LinkId::new(NodeId::from(u), NodeId::from(v))
    }

    pub fn endpoints(&self) -> (&NodeId, &NodeId) {
        (&self.a, &self.b)
    }

    /// True when `n` is one of the endpoints.
    pub fn touches(&self, n: &NodeId) -> bool {
        &self.a == n || &self.b == n
    }

    /// The endpoint opposite to `n`, if `n` is an endpoint at all.
    pub fn other(&self, n: &NodeId) -> Option<&NodeId> {
        if &self.a == n {
            Some(&self.b)
        } else if &self.b == n {
            Some(&self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// One undirected link with its static profile and dynamic up/down state.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub kind: LinkKind,
    /// Nominal capacity in Mbps while the link is up.
    pub capacity_mbps: f64,
    /// One-way propagation delay in ms; reported in end-to-end latency only,
    /// never consulted by the routing or recovery logic.
    pub prop_delay_ms: f64,
    pub up: bool,
}

/// Errors from graph construction and state changes.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop at {0}")]
    SelfLoop(NodeId),
    #[error("duplicate link {0}")]
    DuplicateLink(LinkId),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("link {0} capacity must be positive, got {1}")]
    NonPositiveCapacity(LinkId, String),
}

/// Undirected network graph. All iteration orders are deterministic
/// (`BTreeMap`/`BTreeSet` keyed by node and link ids).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkGraph {
    nodes: BTreeSet<NodeId>,
    links: BTreeMap<LinkId, Link>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node. Errors on a duplicate id.
    pub fn add_node(&mut self, n: NodeId) -> Result<(), TopologyError> {
        if !self.nodes.insert(n.clone()) {
            return Err(TopologyError::DuplicateNode(n));
        }
        Ok(())
    }

    /// Adds an undirected link between two existing, distinct nodes.
    /// The new link starts up.
    pub fn add_link(
        &mut self,
        u: NodeId,
        v: NodeId,
        kind: LinkKind,
        capacity_mbps: f64,
        prop_delay_ms: f64,
    ) -> Result<(), TopologyError> {
        if u == v {
            return Err(TopologyError::SelfLoop(u));
        }
        for n in [&u, &v] {
            if !self.nodes.contains(n) {
                return Err(TopologyError::UnknownNode(n.clone()));
            }
        }
        let id = LinkId::new(u, v);
        if !(capacity_mbps > 0.0) {
            return Err(TopologyError::NonPositiveCapacity(
                id,
                format!("{capacity_mbps}"),
            ));
        }
        if self.links.contains_key(&id) {
            return Err(TopologyError::DuplicateLink(id));
        }
        self.links.insert(
            id,
            Link {
                kind,
                capacity_mbps,
                prop_delay_ms,
                up: true,
            },
        );
        Ok(())
    }

    /// Marks a link up or down. Idempotent; the nominal capacity is kept and
    /// only the effective capacity changes.
    pub fn set_link_state(&mut self, id: &LinkId, up: bool) -> Result<(), TopologyError> {
        let link = self
            .links
            .get_mut(id)
            .ok_or_else(|| TopologyError::UnknownLink(id.clone()))?;
        link.up = up;
        Ok(())
    }

    /// Capacity available for traffic: the nominal capacity while up, zero
    /// while down.
    pub fn effective_capacity(&self, id: &LinkId) -> Result<f64, TopologyError> {
        let link = self
            .links
            .get(id)
            .ok_or_else(|| TopologyError::UnknownLink(id.clone()))?;
        Ok(if link.up { link.capacity_mbps } else { 0.0 })
    }

    pub fn contains_node(&self, n: &NodeId) -> bool {
        self.nodes.contains(n)
    }

    pub fn link(&self, id: &LinkId) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> impl Iterator<Item = (&LinkId, &Link)> {
        self.links.iter()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Up links incident to `n`, with the far endpoint. Deterministic order.
    pub fn up_neighbors<'g>(&'g self, n: &'g NodeId) -> impl Iterator<Item = (&'g NodeId, &'g LinkId)> {
        self.links.iter().filter_map(move |(id, link)| {
            if !link.up {
                return None;
            }
            id.other(n).map(|far| (far, id))
        })
    }

    /// True when the link exists and is up.
    pub fn link_is_up(&self, id: &LinkId) -> bool {
        self.links.get(id).map(|l| l.up).unwrap_or(false)
    }
}
